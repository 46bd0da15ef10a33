//! Independent reference implementations used by the integration tests. Everything here is
//! written from the defining formulas with plain loops, sharing no code paths with the
//! library beyond the data containers.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sumcor::linalg::{DenseMat, SparseView};
use sumcor::regularizers::{RegKind, Regularizer};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_dense(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMat {
    DenseMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Bernoulli(density) support with Gaussian values.
pub fn random_sparse(rows: usize, cols: usize, density: f64, rng: &mut ChaCha8Rng) -> SparseView {
    let mut trip = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if rng.random::<f64>() < density {
                trip.push((r, c, gaussian(rng)));
            }
        }
    }
    SparseView::from_triplets(rows, cols, trip).unwrap()
}

/// Dense view with every entry stored; useful where sparsity does not matter.
pub fn random_full_view(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> SparseView {
    random_sparse(rows, cols, 1.1, rng)
}

pub fn to_vecs(m: &DenseMat) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| m.get(r, c)).collect())
        .collect()
}

/// Triple-loop `A·B`.
pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            for t in 0..k {
                out[i][j] += a[i][t] * b[t][j];
            }
        }
    }
    out
}

pub fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols)
        .map(|c| a.iter().map(|row| row[c]).collect())
        .collect()
}

pub fn trace(a: &[Vec<f64>]) -> f64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

/// `Tr(AᵀB)` by explicit product.
pub fn trace_at_b(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    trace(&matmul(&transpose(a), b))
}

pub fn frob_sq(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().map(|x| x * x).sum()
}

pub fn sub(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
        .collect()
}

/// Effective dense form of a view, with centering/scaling applied from first principles.
pub fn effective_dense(x: &SparseView) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; x.cols()]; x.rows()];
    for (r, c, v) in x.triplets() {
        d[r][c] = v;
    }
    if x.is_centered() {
        let means: Vec<f64> = (0..x.cols())
            .map(|c| d.iter().map(|row| row[c]).sum::<f64>() / x.rows() as f64)
            .collect();
        for row in &mut d {
            row.iter_mut().zip(&means).for_each(|(v, m)| *v -= m);
        }
    }
    if x.is_scaled() {
        let s = 1.0 / (x.rows() as f64).sqrt();
        d.iter_mut().flatten().for_each(|v| *v *= s);
    }
    d
}

/// Random matrix with orthonormal columns by classical Gram–Schmidt on a Gaussian draw.
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while basis.len() < cols {
        let mut v: Vec<f64> = (0..rows).map(|_| gaussian(rng)).collect();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    transpose(&basis)
}

/// `Σ_i Σ_{j≠i} Tr((X_iQ_i)ᵀ X_jQ_j)` by explicit products.
pub fn pairwise_trace_sum(views: &[Vec<Vec<f64>>], qs: &[Vec<Vec<f64>>]) -> f64 {
    let ps: Vec<_> = views.iter().zip(qs).map(|(x, q)| matmul(x, q)).collect();
    let mut total = 0.0;
    for i in 0..ps.len() {
        for j in 0..ps.len() {
            if i != j {
                total += trace_at_b(&ps[i], &ps[j]);
            }
        }
    }
    total
}

/// Minimiser of a convex function on `[lo, hi]` by ternary search.
pub fn argmin_convex(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..300 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

/// Proximal map `argmin ‖Q − V‖² + τ·(λ r(Q) + μ‖Q‖²)` computed by 1-D search: per entry
/// for the entrywise kinds, along each row's direction for the row-group kinds.
pub fn prox_brute(kind: RegKind, lambda: f64, mu: f64, v: &[Vec<f64>], tau: f64) -> Vec<Vec<f64>> {
    let frob = if matches!(kind, RegKind::ElasticL1 | RegKind::ElasticL21) {
        mu
    } else {
        0.0
    };
    match kind {
        RegKind::None => v.to_vec(),
        RegKind::NonNeg => v
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&x| argmin_convex(|q| (q - x) * (q - x), 0.0, x.abs() + 1.0))
                    .collect()
            })
            .collect(),
        RegKind::L1 | RegKind::ElasticL1 => v
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&x| {
                        let bound = x.abs() + 1.0;
                        argmin_convex(
                            |q| (q - x) * (q - x) + tau * (lambda * q.abs() + frob * q * q),
                            -bound,
                            bound,
                        )
                    })
                    .collect()
            })
            .collect(),
        RegKind::L21 | RegKind::ElasticL21 => v
            .iter()
            .map(|row| {
                let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                let t = argmin_convex(
                    |t| (t - n) * (t - n) + tau * (lambda * t + frob * t * t),
                    0.0,
                    n + 1.0,
                );
                if n == 0.0 {
                    row.clone()
                } else {
                    row.iter().map(|x| x * t / n).collect()
                }
            })
            .collect(),
    }
}

/// Augmented Lagrangian by direct double loop over ordered view pairs:
/// `Σ_i Σ_{j≠i} ½‖X_iQ_i − G_j‖² + Σ_i pen_i(Q_i) + (ρ/2)Σ_i ‖X_iQ_i − G_i + Y_i/ρ‖²`.
#[allow(clippy::needless_range_loop)] // mirrors the double sum
pub fn lagrangian_oracle(
    views: &[Vec<Vec<f64>>],
    qs: &[Vec<Vec<f64>>],
    gs: &[Vec<Vec<f64>>],
    ys: &[Vec<Vec<f64>>],
    regs: &[Regularizer],
    rho: f64,
) -> f64 {
    let ps: Vec<_> = views.iter().zip(qs).map(|(x, q)| matmul(x, q)).collect();
    let n = views.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if j != i {
                total += 0.5 * frob_sq(&sub(&ps[i], &gs[j]));
            }
        }
        let q = DenseMat::from_rows(&qs[i]).unwrap();
        total += regs[i].penalty_value(&q).unwrap();
        let shifted: Vec<Vec<f64>> = sub(&ps[i], &gs[i])
            .iter()
            .zip(&ys[i])
            .map(|(a, y)| a.iter().zip(y).map(|(p, yy)| p + yy / rho).collect())
            .collect();
        total += 0.5 * rho * frob_sq(&shifted);
    }
    total
}

/// 1-based rank of the true match with ties resolved in its favour, by brute-force counting.
pub fn rank_brute(dist: &[Vec<f64>], l: usize) -> usize {
    let mut rank = 1;
    for m in 0..dist.len() {
        if m != l && dist[l][m] < dist[l][l] {
            rank += 1;
        }
    }
    rank
}

pub fn nn_freq_brute(dist: &[Vec<f64>]) -> f64 {
    let hits = (0..dist.len())
        .filter(|&l| (0..dist.len()).all(|m| m == l || dist[l][m] >= dist[l][l]))
        .count();
    100.0 * hits as f64 / dist.len() as f64
}

/// Bag-of-words inner product by counting.
pub fn bow_inner(a: &[String], b: &[String]) -> f64 {
    use std::collections::HashMap;
    let mut ca: HashMap<&str, f64> = HashMap::new();
    for t in a {
        *ca.entry(t.as_str()).or_default() += 1.0;
    }
    let mut total = 0.0;
    for t in b {
        total += ca.get(t.as_str()).copied().unwrap_or(0.0);
    }
    total
}

/// Random document over a small vocabulary `w0..w{vocab-1}`.
pub fn random_doc(vocab: usize, len: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    (0..len)
        .map(|_| format!("w{}", rng.random_range(0..vocab)))
        .collect()
}

/// Identical `L x M` views whose latent optimum is exactly attainable.
pub fn aligned_views(l: usize, m: usize, n_views: usize, seed: u64) -> Vec<SparseView> {
    let mut r = rng(seed);
    let x = random_sparse(l, m, 0.3, &mut r);
    vec![x; n_views]
}
