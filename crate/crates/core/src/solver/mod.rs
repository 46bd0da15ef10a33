//! PDD solver for the regularized SUMCOR problem, with plain ADMM as a baseline.
//!
//! Each view `X_i` gets a factor `Q_i`, an orthonormal latent `G_i` standing in for
//! `X_i·Q_i`, and a dual `Y_i` for the splitting constraint `X_i·Q_i = G_i`. A sweep takes
//! proximal-gradient steps on every `Q_i`, then sets every `G_i` to a polar factor. The PDD
//! driver runs a few sweeps per outer iteration and then either updates the duals (when the
//! splitting residual is within the current tolerance) or raises the penalty.

mod config;
mod driver;
mod state;
mod steps;

pub use config::{SolverConfig, SolverMode, EPS_DECAY};
pub use driver::{
    parse_trace_csv, run_admm, run_pdd, solve, trace_csv_string, Solution, StopReason, TraceRow,
    TRACE_HEADER,
};
pub use state::{init_random, validate_dimensions, Problem, SolverState, ViewBlock};
pub use steps::{
    dual_ascent, dual_or_penalty_step, g_aggregate, g_subproblem_objective, grad_q,
    lagrangian_value, primal_residual, run_subsolver, step_size, sweep, update_g, update_q,
    SubsolverReport, DESCENT_SLACK,
};
