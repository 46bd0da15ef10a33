//! The individual updates shared by the PDD and ADMM drivers.
//!
//! Objective convention: the coupling term is `Σ_i Σ_{j≠i} ½‖X_iQ_i − G_j‖²`. This is the
//! function whose partial gradient in `Q_i` is the prox-gradient direction used below and
//! whose minimiser in `G_i` is the polar factor of `Σ_{j≠i} P_j + ρP_i + Y_i`, so every
//! update is a descent step on the same augmented Lagrangian.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{polar_factor, DenseMat, SparseView};
use crate::solver::state::{Problem, SolverState, ViewBlock};

/// Relative slack allowed when checking that the augmented Lagrangian did not increase.
pub const DESCENT_SLACK: f64 = 1e-9;

/// `α = safety / ((I − 1 + ρ) · σ_max²(X_i))`, the scaled inverse Lipschitz constant of the
/// block-`i` gradient.
pub fn step_size(sigma_sq: f64, n_views: usize, rho: f64, safety: f64, view: usize) -> Result<f64> {
    if sigma_sq.is_nan() || sigma_sq <= 0.0 {
        return Err(Error::EmptyView(view));
    }
    if rho.is_nan() || rho <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "penalty ρ={rho} must be > 0"
        )));
    }
    Ok(safety / ((n_views as f64 - 1.0 + rho) * sigma_sq))
}

/// `Xᵀ[(I−1+ρ)·P_i − Σ_{j≠i} G_j − ρ·G_i + Y_i]`, the gradient of the smooth part of the
/// `Q_i` subproblem at the point whose product is `p`.
fn gradient_from(
    x: &SparseView,
    p: &DenseMat,
    y: &DenseMat,
    latents: &[&DenseMat],
    i: usize,
    rho: f64,
) -> Result<DenseMat> {
    let n = latents.len() as f64;
    let mut combo = p.scaled(n - 1.0 + rho);
    for (j, g) in latents.iter().enumerate() {
        combo.add_scaled(if j == i { -rho } else { -1.0 }, g);
    }
    combo.add_scaled(1.0, y);
    x.spmm_left_t(&combo)
}

pub fn grad_q(problem: &Problem, state: &SolverState, i: usize, rho: f64) -> Result<DenseMat> {
    let latents: Vec<&DenseMat> = state.blocks.iter().map(|b| &b.g).collect();
    let b = &state.blocks[i];
    gradient_from(problem.view(i), &b.p, &b.y, &latents, i, rho)
}

/// `q_steps` proximal-gradient steps on view `i` against frozen latents. Returns the new
/// `(Q_i, P_i)`.
fn q_update(
    problem: &Problem,
    latents: &[&DenseMat],
    block: &ViewBlock,
    i: usize,
    rho: f64,
    q_steps: usize,
    safety: f64,
) -> Result<(DenseMat, DenseMat)> {
    let x = problem.view(i);
    let alpha = step_size(problem.sigma_sq(i), latents.len(), rho, safety, i)?;
    let mut q = block.q.clone();
    let mut p = block.p.clone();
    for _ in 0..q_steps {
        let grad = gradient_from(x, &p, &block.y, latents, i, rho)?;
        if !grad.is_finite() {
            return Err(Error::NonFinite("Q-update gradient"));
        }
        q.add_scaled(-alpha, &grad);
        // A prox-gradient step with step α on f + λr is prox_{α·λr} in ½-quadratic form,
        // which is `prox(·, 2α)` in the unhalved convention of `Regularizer::prox`.
        problem.reg(i).prox_in_place(&mut q, 2.0 * alpha)?;
        p = x.spmm_right(&q)?;
    }
    Ok((q, p))
}

/// Proximal-gradient update of `Q_i` (and its cached product) with the other blocks fixed.
pub fn update_q(
    problem: &Problem,
    state: &mut SolverState,
    i: usize,
    rho: f64,
    q_steps: usize,
    safety: f64,
) -> Result<()> {
    let latents: Vec<&DenseMat> = state.blocks.iter().map(|b| &b.g).collect();
    let (q, p) = q_update(problem, &latents, &state.blocks[i], i, rho, q_steps, safety)?;
    let b = &mut state.blocks[i];
    b.q = q;
    b.p = p;
    Ok(())
}

/// `Σ_{j≠i} P_j + ρ·P_i + Y_i`, summed in view order.
pub fn g_aggregate(state: &SolverState, i: usize, rho: f64) -> DenseMat {
    let b = &state.blocks[i];
    let mut agg = DenseMat::zeros(b.g.rows(), b.g.cols());
    for (j, other) in state.blocks.iter().enumerate() {
        agg.add_scaled(if j == i { rho } else { 1.0 }, &other.p);
    }
    agg.add_scaled(1.0, &b.y);
    agg
}

/// Value of the `G_i` subproblem `Σ_{j≠i} ½‖P_j − G‖² + (ρ/2)‖P_i − G + Y_i/ρ‖²` at `g`.
pub fn g_subproblem_objective(state: &SolverState, i: usize, rho: f64, g: &DenseMat) -> f64 {
    let mut total = 0.0;
    for (j, other) in state.blocks.iter().enumerate() {
        if j != i {
            total += 0.5 * other.p.sub(g).frob_norm_sq();
        }
    }
    let b = &state.blocks[i];
    let mut shifted = b.p.sub(g);
    shifted.add_scaled(1.0 / rho, &b.y);
    total + 0.5 * rho * shifted.frob_norm_sq()
}

/// Exact minimisation over orthonormal `G_i`: the polar factor of the aggregate.
pub fn update_g(state: &mut SolverState, i: usize, rho: f64) -> Result<()> {
    let g = polar_factor(&g_aggregate(state, i, rho))?;
    state.blocks[i].g = g;
    Ok(())
}

/// `Σ_i ‖P_i − G_i‖_F²`.
pub fn primal_residual(state: &SolverState) -> f64 {
    state
        .blocks
        .iter()
        .map(|b| b.p.sub(&b.g).frob_norm_sq())
        .sum()
}

/// Applies `Y_i ← Y_i + ρ(P_i − G_i)` to every view.
pub fn dual_ascent(state: &mut SolverState) {
    let rho = state.rho;
    for b in &mut state.blocks {
        let diff = b.p.sub(&b.g);
        b.y.add_scaled(rho, &diff);
    }
}

/// Dual step when `residual <= eta`, otherwise `ρ ← ρ / c` with the duals held.
/// Returns `true` when the dual step was taken.
pub fn dual_or_penalty_step(state: &mut SolverState, residual: f64, eta: f64, c: f64) -> bool {
    if residual <= eta {
        dual_ascent(state);
        true
    } else {
        state.rho /= c;
        false
    }
}

/// Augmented Lagrangian
/// `Σ_i Σ_{j≠i} ½‖P_i − G_j‖² + Σ_i λ_i r_i(Q_i) + (ρ/2) Σ_i ‖P_i − G_i + Y_i/ρ‖²`.
///
/// The coupling sum is expanded so the cost is `O(I·L·K)` rather than quadratic in `I`.
pub fn lagrangian_value(problem: &Problem, state: &SolverState, rho: f64) -> f64 {
    let n = state.n_views();
    let b0 = &state.blocks[0];
    let mut g_sum = DenseMat::zeros(b0.g.rows(), b0.g.cols());
    let mut g_sq_total = 0.0;
    for b in &state.blocks {
        g_sum.add_scaled(1.0, &b.g);
        g_sq_total += b.g.frob_norm_sq();
    }
    let mut total = 0.0;
    for (i, b) in state.blocks.iter().enumerate() {
        let p_sq = b.p.frob_norm_sq();
        let g_sq = b.g.frob_norm_sq();
        let cross = b.p.dot(&g_sum) - b.p.dot(&b.g);
        total += 0.5 * ((n as f64 - 1.0) * p_sq - 2.0 * cross + (g_sq_total - g_sq));
        total += problem.reg(i).penalty_value(&b.q).unwrap_or(f64::INFINITY);
        let mut shifted = b.p.sub(&b.g);
        shifted.add_scaled(1.0 / rho, &b.y);
        total += 0.5 * rho * shifted.frob_norm_sq();
    }
    total
}

/// One alternating sweep: all `Q_i` against a frozen snapshot of the latents, then all `G_i`
/// against the fresh products. Both phases run in parallel over views; each view's work is
/// sequential, so the result does not depend on the thread count.
///
/// Returns the largest max-norm change of any `Q_i` or `G_i`.
pub fn sweep(
    problem: &Problem,
    state: &mut SolverState,
    rho: f64,
    q_steps: usize,
    safety: f64,
) -> Result<f64> {
    let n = state.n_views();
    let updated: Vec<(DenseMat, DenseMat)> = {
        let latents: Vec<&DenseMat> = state.blocks.iter().map(|b| &b.g).collect();
        (0..n)
            .into_par_iter()
            .map(|i| q_update(problem, &latents, &state.blocks[i], i, rho, q_steps, safety))
            .collect::<Result<_>>()?
    };
    let mut change = 0.0_f64;
    for (b, (q, p)) in state.blocks.iter_mut().zip(updated) {
        change = change.max(b.q.max_abs_diff(&q));
        b.q = q;
        b.p = p;
    }

    let new_latents: Vec<DenseMat> = (0..n)
        .into_par_iter()
        .map(|i| polar_factor(&g_aggregate(state, i, rho)))
        .collect::<Result<_>>()?;
    for (b, g) in state.blocks.iter_mut().zip(new_latents) {
        change = change.max(b.g.max_abs_diff(&g));
        b.g = g;
    }
    Ok(change)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubsolverReport {
    pub sweeps: usize,
    pub converged: bool,
    pub last_change: f64,
    pub lagrangian: f64,
}

/// Inexact alternating minimisation of the augmented Lagrangian at fixed duals and penalty.
///
/// Stops once a sweep moves no `Q_i` or `G_i` entry by more than `eps`, or after
/// `max_sweeps`. Errors with [`Error::StepSizeViolation`] if a sweep increases the
/// Lagrangian beyond [`DESCENT_SLACK`].
pub fn run_subsolver(
    problem: &Problem,
    state: &mut SolverState,
    rho: f64,
    eps: f64,
    max_sweeps: usize,
    q_steps: usize,
    safety: f64,
) -> Result<SubsolverReport> {
    let mut prev = lagrangian_value(problem, state, rho);
    let mut report = SubsolverReport {
        sweeps: 0,
        converged: false,
        last_change: f64::INFINITY,
        lagrangian: prev,
    };
    for s in 1..=max_sweeps {
        let change = sweep(problem, state, rho, q_steps, safety)?;
        let value = lagrangian_value(problem, state, rho);
        if value > prev + DESCENT_SLACK * prev.abs().max(1.0) {
            return Err(Error::StepSizeViolation {
                sweep: s,
                before: prev,
                after: value,
            });
        }
        prev = value;
        report = SubsolverReport {
            sweeps: s,
            converged: change <= eps,
            last_change: change,
            lagrangian: value,
        };
        if report.converged {
            break;
        }
    }
    Ok(report)
}
