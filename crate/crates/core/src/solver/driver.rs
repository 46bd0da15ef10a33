use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::io::fmt_g17;
use crate::linalg::SparseView;
use crate::regularizers::Regularizer;
use crate::solver::config::{SolverConfig, SolverMode};
use crate::solver::state::{init_random, Problem, SolverState};
use crate::solver::steps::{
    dual_ascent, dual_or_penalty_step, lagrangian_value, primal_residual, run_subsolver,
};
use crate::synth::correlation_from_products;

/// One outer iteration of a run. Row 0 describes the initial point.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub seconds: f64,
    /// Penalty used during this iteration's sub-solve.
    pub rho: f64,
    pub primal_residual: f64,
    /// Augmented Lagrangian after the sub-solve, before the dual/penalty step.
    pub lagrangian: f64,
    /// Total pairwise correlation as a percentage of `K·I·(I−1)`.
    pub total_correlation: f64,
    pub penalty_increased: bool,
    pub sweeps: usize,
}

pub const TRACE_HEADER: &str = "iter,seconds,rho,primal_residual,lagrangian,total_correlation";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub state: SolverState,
    pub trace: Vec<TraceRow>,
    pub stop: StopReason,
}

/// Penalty-dual decomposition: sub-solve to `ε^(r)`, then a dual step if the primal residual
/// is within `η^(r)` or a penalty increase otherwise.
pub fn run_pdd(
    views: &[SparseView],
    config: &SolverConfig,
    regs: &[Regularizer],
    init: Option<SolverState>,
) -> Result<Solution> {
    run(views, config, regs, init, SolverMode::Pdd)
}

/// Plain ADMM baseline: one sweep, then an unconditional dual step, with `ρ` fixed.
pub fn run_admm(
    views: &[SparseView],
    config: &SolverConfig,
    regs: &[Regularizer],
    init: Option<SolverState>,
) -> Result<Solution> {
    run(views, config, regs, init, SolverMode::Admm)
}

/// Dispatches on `config.mode`.
pub fn solve(
    views: &[SparseView],
    config: &SolverConfig,
    regs: &[Regularizer],
    init: Option<SolverState>,
) -> Result<Solution> {
    run(views, config, regs, init, config.mode)
}

fn run(
    views: &[SparseView],
    config: &SolverConfig,
    regs: &[Regularizer],
    init: Option<SolverState>,
    mode: SolverMode,
) -> Result<Solution> {
    config.validate()?;
    let problem = Problem::new(views, regs, config.k, config.power_iters, config.power_seed)?;
    let mut state = match init {
        Some(s) => {
            check_init(views, config.k, &s)?;
            s
        }
        None => init_random(views, config.k, config.seed)?,
    };
    state.rho = config.rho0;
    let tol_feas = config.resolved_tol_feas(problem.rows());
    let n = views.len();
    let k = config.k;
    let start = Instant::now();
    let elapsed = |start: &Instant| {
        if config.record_time {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    };

    let mut trace = vec![TraceRow {
        iter: 0,
        seconds: 0.0,
        rho: state.rho,
        primal_residual: primal_residual(&state),
        lagrangian: lagrangian_value(&problem, &state, state.rho),
        total_correlation: correlation_from_products(&state.products(), k).1,
        penalty_increased: false,
        sweeps: 0,
    }];
    let mut stop = StopReason::MaxIterations;

    for r in 1..=config.outer_max {
        let previous: Vec<_> = state
            .blocks
            .iter()
            .map(|b| (b.q.clone(), b.g.clone()))
            .collect();
        let rho = state.rho;
        let report = match mode {
            SolverMode::Pdd => run_subsolver(
                &problem,
                &mut state,
                rho,
                config.eps(r),
                config.sub_max_sweeps,
                config.q_steps,
                config.safety,
            )?,
            SolverMode::Admm => run_subsolver(
                &problem,
                &mut state,
                rho,
                0.0,
                1,
                config.q_steps,
                config.safety,
            )?,
        };
        let residual = primal_residual(&state);
        let percent = correlation_from_products(&state.products(), k).1;
        let penalty_increased = match mode {
            SolverMode::Pdd => !dual_or_penalty_step(&mut state, residual, config.eta(r), config.c),
            SolverMode::Admm => {
                dual_ascent(&mut state);
                false
            }
        };
        if penalty_increased {
            log::debug!(
                "iter {r}: residual {residual:e} > eta {:e}, rho -> {}",
                config.eta(r),
                state.rho
            );
        }
        trace.push(TraceRow {
            iter: r,
            seconds: elapsed(&start),
            rho,
            primal_residual: residual,
            lagrangian: report.lagrangian,
            total_correlation: percent,
            penalty_increased,
            sweeps: report.sweeps,
        });

        let change = state
            .blocks
            .iter()
            .zip(&previous)
            .map(|(b, (q, g))| b.q.max_abs_diff(q).max(b.g.max_abs_diff(g)))
            .fold(0.0_f64, f64::max);
        if residual <= tol_feas && change <= config.tol_change {
            stop = StopReason::Converged;
            break;
        }
    }
    log::info!(
        "{mode} finished after {} outer iterations ({stop:?}), {} views, correlation {:.4}%",
        trace.len() - 1,
        n,
        trace.last().map_or(0.0, |t| t.total_correlation)
    );
    Ok(Solution { state, trace, stop })
}

fn check_init(views: &[SparseView], k: usize, s: &SolverState) -> Result<()> {
    if s.n_views() != views.len() {
        return Err(Error::dim("initial state", views.len(), s.n_views()));
    }
    for (x, b) in views.iter().zip(&s.blocks) {
        let want_q = (x.cols(), k);
        let want_l = (x.rows(), k);
        if b.q.shape() != want_q
            || b.g.shape() != want_l
            || b.y.shape() != want_l
            || b.p.shape() != want_l
        {
            return Err(Error::dim(
                "initial state",
                format!("{want_q:?} / {want_l:?}"),
                format!("{:?}", b.q.shape()),
            ));
        }
    }
    Ok(())
}

pub fn trace_csv_string(trace: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for t in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            t.iter,
            fmt_g17(t.seconds),
            fmt_g17(t.rho),
            fmt_g17(t.primal_residual),
            fmt_g17(t.lagrangian),
            fmt_g17(t.total_correlation)
        );
    }
    out
}

/// Reads a trace written by [`trace_csv_string`]. Per-iteration flags that are not part of
/// the file (penalty increases, sweep counts) come back as defaults.
pub fn parse_trace_csv(text: &str, origin: &Path) -> Result<Vec<TraceRow>> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => return Err(perr(1, format!("expected header {TRACE_HEADER:?}"))),
    }
    let mut rows = Vec::new();
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(perr(no + 1, "expected 6 fields".into()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| perr(no + 1, e.to_string()));
        rows.push(TraceRow {
            iter: f[0]
                .parse()
                .map_err(|_| perr(no + 1, "bad iteration".into()))?,
            seconds: num(f[1])?,
            rho: num(f[2])?,
            primal_residual: num(f[3])?,
            lagrangian: num(f[4])?,
            total_correlation: num(f[5])?,
            penalty_increased: false,
            sweeps: 0,
        });
    }
    Ok(rows)
}
