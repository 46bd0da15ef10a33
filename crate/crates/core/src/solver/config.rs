use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{DEFAULT_POWER_ITERS, DEFAULT_POWER_SEED};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMode {
    /// Penalty-dual decomposition: inexact sub-solve, then a dual step or a penalty increase.
    Pdd,
    /// Plain ADMM with fixed penalty and a dual step after every sweep. No convergence guarantee.
    Admm,
}

impl fmt::Display for SolverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverMode::Pdd => "pdd",
            SolverMode::Admm => "admm",
        })
    }
}

impl FromStr for SolverMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pdd" => Ok(SolverMode::Pdd),
            "admm" => Ok(SolverMode::Admm),
            other => Err(Error::Config(format!("unknown solver mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Number of canonical components.
    pub k: usize,
    pub rho0: f64,
    /// Penalty growth: on a failed feasibility test `ρ ← ρ / c`.
    pub c: f64,
    /// Feasibility schedule `η^(r) = eta0 / r`.
    pub eta0: f64,
    /// Sub-solver accuracy schedule `ε^(r) = eps0 · 0.9^r`.
    pub eps0: f64,
    pub sub_max_sweeps: usize,
    /// Prox-gradient steps on each `Q_i` per sweep.
    pub q_steps: usize,
    pub outer_max: usize,
    /// Primal residual bound for the outer stop. `None` means `1e-6 · L · K`.
    pub tol_feas: Option<f64>,
    /// Max-norm iterate change bound for the outer stop.
    pub tol_change: f64,
    /// Fraction of the inverse Lipschitz constant used as the step size.
    pub safety: f64,
    pub power_iters: usize,
    pub power_seed: u64,
    pub mode: SolverMode,
    pub seed: u64,
    /// Record wall-clock seconds in the trace; when off the column is zero and traces are
    /// byte-reproducible.
    pub record_time: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 5,
            rho0: 2.0,
            c: 0.9,
            eta0: 100.0,
            eps0: 1e-2,
            sub_max_sweeps: 5,
            q_steps: 1,
            outer_max: 500,
            tol_feas: None,
            tol_change: 1e-6,
            safety: 0.9,
            power_iters: DEFAULT_POWER_ITERS,
            power_seed: DEFAULT_POWER_SEED,
            mode: SolverMode::Pdd,
            seed: 0,
            record_time: true,
        }
    }
}

pub const EPS_DECAY: f64 = 0.9;

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.k == 0 {
            return bad("solver.k must be >= 1".into());
        }
        if !(self.rho0.is_finite() && self.rho0 > 0.0) {
            return bad(format!("solver.rho0 must be > 0, got {}", self.rho0));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return bad(format!("solver.c must lie in (0, 1), got {}", self.c));
        }
        if !(self.eta0.is_finite() && self.eta0 > 0.0) {
            return bad(format!("solver.eta0 must be > 0, got {}", self.eta0));
        }
        if !(self.eps0.is_finite() && self.eps0 > 0.0) {
            return bad(format!("solver.eps0 must be > 0, got {}", self.eps0));
        }
        if self.sub_max_sweeps == 0 || self.q_steps == 0 || self.power_iters == 0 {
            return bad("sweep, step and power-iteration counts must be >= 1".into());
        }
        if let Some(t) = self.tol_feas {
            if !(t.is_finite() && t >= 0.0) {
                return bad(format!("solver.tol_feas must be >= 0, got {t}"));
            }
        }
        if !(self.tol_change.is_finite() && self.tol_change >= 0.0) {
            return bad(format!(
                "solver.tol_change must be >= 0, got {}",
                self.tol_change
            ));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return bad(format!(
                "solver.safety must lie in (0, 1], got {}",
                self.safety
            ));
        }
        Ok(())
    }

    /// `η^(r)` for the 1-based outer iteration `r`.
    pub fn eta(&self, r: usize) -> f64 {
        self.eta0 / r.max(1) as f64
    }

    /// `ε^(r)` for the 1-based outer iteration `r`.
    pub fn eps(&self, r: usize) -> f64 {
        self.eps0 * EPS_DECAY.powi(r as i32)
    }

    pub fn resolved_tol_feas(&self, rows: usize) -> f64 {
        self.tol_feas.unwrap_or(1e-6 * rows as f64 * self.k as f64)
    }
}
