//! Structural penalties on the canonical components and their proximal operators.
//!
//! The proximal map here is `V ↦ argmin_Q ‖Q − V‖_F² + τ·penalty(Q)`, with no `½` on the
//! quadratic, so the ℓ1 threshold is `τλ/2`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::DenseMat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RegKind {
    None,
    /// Entrywise `‖Q‖₁`.
    L1,
    /// Row-group `‖Q‖₂,₁ = Σ_m ‖Q(m,:)‖₂`.
    L21,
    /// `λ‖Q‖₁ + μ‖Q‖_F²`.
    ElasticL1,
    /// `λ‖Q‖₂,₁ + μ‖Q‖_F²`.
    ElasticL21,
    /// Indicator of `Q ≥ 0`.
    NonNeg,
}

impl RegKind {
    pub const ALL: [RegKind; 6] = [
        RegKind::None,
        RegKind::L1,
        RegKind::L21,
        RegKind::ElasticL1,
        RegKind::ElasticL21,
        RegKind::NonNeg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegKind::None => "none",
            RegKind::L1 => "l1",
            RegKind::L21 => "l21",
            RegKind::ElasticL1 => "elastic_l1",
            RegKind::ElasticL21 => "elastic_l21",
            RegKind::NonNeg => "nonneg",
        }
    }

    fn is_elastic(self) -> bool {
        matches!(self, RegKind::ElasticL1 | RegKind::ElasticL21)
    }
}

impl fmt::Display for RegKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RegKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown regularizer kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regularizer {
    kind: RegKind,
    lambda: f64,
    mu: f64,
}

impl Default for Regularizer {
    fn default() -> Self {
        Regularizer::none()
    }
}

impl Regularizer {
    pub fn new(kind: RegKind, lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "regularizer weight λ={lambda} must be >= 0"
            )));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Frobenius weight μ={mu} must be >= 0"
            )));
        }
        Ok(Regularizer { kind, lambda, mu })
    }

    pub fn none() -> Self {
        Regularizer {
            kind: RegKind::None,
            lambda: 0.0,
            mu: 0.0,
        }
    }

    pub fn l1(lambda: f64) -> Result<Self> {
        Regularizer::new(RegKind::L1, lambda, 0.0)
    }

    pub fn l21(lambda: f64) -> Result<Self> {
        Regularizer::new(RegKind::L21, lambda, 0.0)
    }

    pub fn elastic_l1(lambda: f64, mu: f64) -> Result<Self> {
        Regularizer::new(RegKind::ElasticL1, lambda, mu)
    }

    pub fn elastic_l21(lambda: f64, mu: f64) -> Result<Self> {
        Regularizer::new(RegKind::ElasticL21, lambda, mu)
    }

    pub fn nonneg() -> Self {
        Regularizer {
            kind: RegKind::NonNeg,
            lambda: 0.0,
            mu: 0.0,
        }
    }

    pub fn kind(&self) -> RegKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `λ·r(Q)`; `+∞` when a nonnegativity constraint is violated.
    pub fn penalty_value(&self, q: &DenseMat) -> Result<f64> {
        if !q.is_finite() {
            return Err(Error::NonFinite("penalty_value"));
        }
        let v = q.as_slice();
        let frob = || self.mu * q.frob_norm_sq();
        Ok(match self.kind {
            RegKind::None => 0.0,
            RegKind::L1 => self.lambda * l1_norm(v),
            RegKind::L21 => self.lambda * l21_norm(q),
            RegKind::ElasticL1 => self.lambda * l1_norm(v) + frob(),
            RegKind::ElasticL21 => self.lambda * l21_norm(q) + frob(),
            RegKind::NonNeg => {
                if v.iter().all(|&x| x >= 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        })
    }

    pub fn prox(&self, v: &DenseMat, tau: f64) -> Result<DenseMat> {
        let mut out = v.clone();
        self.prox_in_place(&mut out, tau)?;
        Ok(out)
    }

    pub fn prox_in_place(&self, v: &mut DenseMat, tau: f64) -> Result<()> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "prox step τ={tau} must be > 0"
            )));
        }
        if !v.is_finite() {
            return Err(Error::NonFinite("prox"));
        }
        let threshold = 0.5 * tau * self.lambda;
        match self.kind {
            RegKind::None => {}
            RegKind::NonNeg => v.as_mut_slice().iter_mut().for_each(|x| *x = x.max(0.0)),
            RegKind::L1 | RegKind::ElasticL1 => v
                .as_mut_slice()
                .iter_mut()
                .for_each(|x| *x = soft_threshold(*x, threshold)),
            RegKind::L21 | RegKind::ElasticL21 => {
                for r in 0..v.rows() {
                    let row = v.row_mut(r);
                    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let keep = if norm > threshold {
                        1.0 - threshold / norm
                    } else {
                        0.0
                    };
                    row.iter_mut().for_each(|x| *x *= keep);
                }
            }
        }
        if self.kind.is_elastic() && self.mu > 0.0 {
            v.scale(1.0 / (1.0 + tau * self.mu));
        }
        Ok(())
    }
}

#[inline]
fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn l21_norm(q: &DenseMat) -> f64 {
    (0..q.rows())
        .map(|r| q.row(r).iter().map(|x| x * x).sum::<f64>().sqrt())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> DenseMat {
        DenseMat::from_rows(rows).unwrap()
    }

    fn prox_objective(reg: &Regularizer, q: &DenseMat, v: &DenseMat, tau: f64) -> f64 {
        q.sub(v).frob_norm_sq() + tau * reg.penalty_value(q).unwrap()
    }

    fn all_kinds(lambda: f64, mu: f64) -> Vec<Regularizer> {
        RegKind::ALL
            .iter()
            .map(|&k| Regularizer::new(k, lambda, mu).unwrap())
            .collect()
    }

    #[test]
    fn penalty_examples() {
        assert_eq!(
            Regularizer::l1(2.0)
                .unwrap()
                .penalty_value(&m(&[&[1.0, -1.0]]))
                .unwrap(),
            4.0
        );
        assert_eq!(
            Regularizer::l21(1.0)
                .unwrap()
                .penalty_value(&m(&[&[3.0, 4.0]]))
                .unwrap(),
            5.0
        );
        let e = Regularizer::elastic_l1(1.0, 1.0).unwrap();
        assert_eq!(e.penalty_value(&m(&[&[2.0]])).unwrap(), 6.0);
        let none = Regularizer::new(RegKind::None, 5.0, 0.0).unwrap();
        assert_eq!(none.penalty_value(&m(&[&[3.0, -2.0]])).unwrap(), 0.0);
        let nn = Regularizer::nonneg();
        assert_eq!(nn.penalty_value(&m(&[&[0.0, 2.0]])).unwrap(), 0.0);
        assert_eq!(
            nn.penalty_value(&m(&[&[-1e-9, 2.0]])).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn prox_examples() {
        let p = Regularizer::l1(1.0)
            .unwrap()
            .prox(&m(&[&[0.7]]), 1.0)
            .unwrap();
        assert!((p.get(0, 0) - 0.2).abs() < 1e-15);
        let p = Regularizer::l21(2.0)
            .unwrap()
            .prox(&m(&[&[3.0, 4.0]]), 1.0)
            .unwrap();
        assert!(p.max_abs_diff(&m(&[&[2.4, 3.2]])) < 1e-15);
        let p = Regularizer::nonneg()
            .prox(&m(&[&[-1.0, 2.0]]), 1.0)
            .unwrap();
        assert_eq!(p, m(&[&[0.0, 2.0]]));
        let p = Regularizer::elastic_l1(1.0, 1.0)
            .unwrap()
            .prox(&m(&[&[0.7]]), 1.0)
            .unwrap();
        assert!((p.get(0, 0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn prox_rejects_bad_step() {
        let r = Regularizer::l1(1.0).unwrap();
        assert!(r.prox(&m(&[&[1.0]]), 0.0).is_err());
        assert!(r.prox(&m(&[&[1.0]]), -1.0).is_err());
        assert!(Regularizer::l1(-1.0).is_err());
        assert!("l3".parse::<RegKind>().is_err());
        assert_eq!(
            "elastic_l21".parse::<RegKind>().unwrap(),
            RegKind::ElasticL21
        );
    }

    #[test]
    fn zero_weight_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = DenseMat::from_fn(6, 3, |_, _| rng.random_range(-3.0..3.0));
        for reg in all_kinds(0.0, 0.0) {
            if reg.kind() == RegKind::NonNeg {
                continue;
            }
            assert_eq!(reg.prox(&v, 0.7).unwrap(), v, "{}", reg.kind());
        }
        // elastic with μ>0 still shrinks
        let p = Regularizer::elastic_l21(0.0, 1.0)
            .unwrap()
            .prox(&v, 1.0)
            .unwrap();
        assert!(p.max_abs_diff(&v.scaled(0.5)) < 1e-15);
    }

    #[test]
    fn nonneg_projection_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = DenseMat::from_fn(5, 4, |_, _| rng.random_range(-1.0..1.0));
        let once = Regularizer::nonneg().prox(&v, 1.0).unwrap();
        assert_eq!(Regularizer::nonneg().prox(&once, 1.0).unwrap(), once);
    }

    #[test]
    fn output_beats_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for reg in all_kinds(0.8, 0.3) {
            let v = DenseMat::from_fn(5, 3, |_, _| rng.random_range(-2.0..2.0));
            let tau = 1.3;
            let p = reg.prox(&v, tau).unwrap();
            let best = prox_objective(&reg, &p, &v, tau);
            assert!(best <= prox_objective(&reg, &v, &v, tau) + 1e-12);
            for _ in 0..100 {
                let mut q = p.clone();
                q.as_mut_slice()
                    .iter_mut()
                    .for_each(|x| *x += rng.random_range(-1e-3..1e-3));
                assert!(
                    best <= prox_objective(&reg, &q, &v, tau) + 1e-12,
                    "{}",
                    reg.kind()
                );
            }
        }
    }
}
