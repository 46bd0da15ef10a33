//! Batch front end: `synth`, `solve`, `metrics`, `eval-retrieval` and `hash` subcommands
//! driven by a flat `key = value` config.
//!
//! Every subcommand builds all of its outputs in memory before touching the output
//! directory, so a failing run leaves nothing behind, and always writes `resolved.cfg` with
//! every key and its effective value.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::RunConfig;

use crate::error::{Error, Result};
use crate::io::{
    dense_csv_string, fmt_g17, matrix_market_string, read_dense_csv, read_matrix_market,
};
use crate::linalg::{DenseMat, SparseView};
use crate::retrieval::{evaluate_pairs, hash_documents, RetrievalResult};
use crate::solver::{parse_trace_csv, solve, trace_csv_string};
use crate::synth::{
    gen_shared_factor, gen_with_outliers, metric1, metric2, time_to_fraction, total_correlation,
    IndexSets,
};

pub const RESOLVED_CONFIG: &str = "resolved.cfg";
pub const METRICS_HEADER: &str = "total_correlation,metric_1,metric_2,time_95";
pub const PAIRS_HEADER: &str = "i,j,aroc,nn_freq";

#[derive(Debug, Parser)]
#[command(
    name = "sumcor",
    version,
    about = "Regularized multiview CCA on sparse views"
)]
pub struct Cli {
    /// Flat key = value config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides solver.seed, synth.seed and hash.seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Extra key=value overrides, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate synthetic views (view_<i>.mtx, index_sets.txt, spec.cfg).
    Synth,
    /// Fit factors (Q_<i>.csv, G_<i>.csv, trace.csv).
    Solve,
    /// Score a solve (metrics.csv).
    Metrics,
    /// Cross-view retrieval on held-out rows (pairs.csv).
    EvalRetrieval,
    /// Hash a one-document-per-line text file into a sparse view (hashed.mtx).
    Hash,
}

/// Named output files, written together once every one of them is ready.
pub type Outputs = Vec<(String, String)>;

pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for pair in &cli.overrides {
        cfg.set_pair(pair)?;
    }
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    Ok(cfg)
}

/// Runs one subcommand and returns its outputs without writing them.
pub fn run_command(command: Command, cfg: &RunConfig) -> Result<Outputs> {
    let mut out = match command {
        Command::Synth => cmd_synth(cfg)?,
        Command::Solve => cmd_solve(cfg)?,
        Command::Metrics => cmd_metrics(cfg)?,
        Command::EvalRetrieval => cmd_eval_retrieval(cfg)?,
        Command::Hash => cmd_hash(cfg)?,
    };
    out.push((RESOLVED_CONFIG.to_string(), cfg.to_file_string()));
    Ok(out)
}

pub fn write_outputs(dir: &Path, outputs: &Outputs) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, body) in outputs {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Parses arguments, runs, writes outputs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_cli(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run_cli(cli: &Cli) -> Result<()> {
    let cfg = resolve_config(cli)?;
    let outputs = match cli.threads {
        Some(0) => return Err(Error::Config("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run_command(cli.command, &cfg))?,
        None => run_command(cli.command, &cfg)?,
    };
    write_outputs(&cli.out, &outputs)
}

fn load_views(paths: &[PathBuf], center: bool, scale: bool, what: &str) -> Result<Vec<SparseView>> {
    if paths.is_empty() {
        return Err(Error::Config(format!(
            "no {what} given and none found in io.input"
        )));
    }
    paths
        .iter()
        .map(|p| {
            let x = read_matrix_market(p)?;
            let x = if center { x.centered() } else { x };
            Ok(x.with_scaling(scale))
        })
        .collect()
}

fn load_factors(cfg: &RunConfig) -> Result<Vec<DenseMat>> {
    let paths = cfg.path_list("io.q", "Q", "csv");
    if paths.is_empty() {
        return Err(Error::Config(
            "no factors given in io.q and no Q_<i>.csv in io.input".into(),
        ));
    }
    paths.iter().map(read_dense_csv).collect()
}

fn train_views(cfg: &RunConfig) -> Result<Vec<SparseView>> {
    load_views(
        &cfg.path_list("io.views", "view", "mtx"),
        cfg.center()?,
        cfg.scale()?,
        "views",
    )
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<Outputs> {
    let spec = cfg.synth_spec()?;
    let (views, sets) = if spec.outliers == 0 {
        let views = gen_shared_factor(&spec)?;
        let cols = views[0].cols();
        (views, IndexSets::all_signal(cols))
    } else {
        gen_with_outliers(&spec)?
    };
    let mut out: Outputs = views
        .iter()
        .enumerate()
        .map(|(i, x)| (format!("view_{}.mtx", i + 1), matrix_market_string(x)))
        .collect();
    out.push(("index_sets.txt".into(), sets.to_file_string()));
    out.push(("spec.cfg".into(), cfg.synth_echo()));
    Ok(out)
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Outputs> {
    let solver = cfg.solver_config()?;
    let views = train_views(cfg)?;
    let regs = cfg.regularizers(views.len())?;
    let solution = solve(&views, &solver, &regs, None)?;
    log::info!("solve stopped: {:?}", solution.stop);
    let mut out = Outputs::new();
    for (i, b) in solution.state.blocks.iter().enumerate() {
        out.push((format!("Q_{}.csv", i + 1), dense_csv_string(&b.q)));
    }
    for (i, b) in solution.state.blocks.iter().enumerate() {
        out.push((format!("G_{}.csv", i + 1), dense_csv_string(&b.g)));
    }
    out.push(("trace.csv".into(), trace_csv_string(&solution.trace)));
    Ok(out)
}

fn load_index_sets(cfg: &RunConfig, cols: usize) -> Result<IndexSets> {
    let path = cfg.path_or_default("io.index_sets", "index_sets.txt");
    let sets = if cfg.is_set("io.index_sets") || path.exists() {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        IndexSets::parse(&text)?
    } else {
        IndexSets::all_signal(cols)
    };
    sets.validate_for(cols)
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(sets)
}

pub fn cmd_metrics(cfg: &RunConfig) -> Result<Outputs> {
    let views = train_views(cfg)?;
    let qs = load_factors(cfg)?;
    let sets = load_index_sets(cfg, views[0].cols())?;
    let trace_path = cfg.path_or_default("io.trace", "trace.csv");
    let trace_text = std::fs::read_to_string(&trace_path).map_err(|e| Error::io(&trace_path, e))?;
    let trace = parse_trace_csv(&trace_text, &trace_path)?;

    let (_, pct) = total_correlation(&views, &qs)?;
    let m1 = metric1(&views, &qs, &sets.signal)?;
    let m2 = if sets.outlier.is_empty() {
        String::new()
    } else {
        fmt_g17(metric2(&qs, &sets.outlier)?)
    };
    let t95 = match time_to_fraction(&trace, 0.95)? {
        Some(s) => fmt_g17(s),
        None => "inf".into(),
    };
    let body = format!(
        "{METRICS_HEADER}\n{},{},{m2},{t95}\n",
        fmt_g17(pct),
        fmt_g17(m1)
    );
    Ok(vec![("metrics.csv".into(), body)])
}

pub fn pairs_csv_string(res: &RetrievalResult) -> String {
    let mut out = format!("{PAIRS_HEADER}\n");
    for p in &res.pairs {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.i + 1,
            p.j + 1,
            fmt_g17(p.aroc),
            fmt_g17(p.nn_freq)
        );
    }
    for (i, (a, n)) in res.per_view.iter().enumerate() {
        let _ = writeln!(out, "{},avg,{},{}", i + 1, fmt_g17(*a), fmt_g17(*n));
    }
    let _ = writeln!(
        out,
        "avg,avg,{},{}",
        fmt_g17(res.mean_aroc),
        fmt_g17(res.mean_nn_freq)
    );
    out
}

pub fn cmd_eval_retrieval(cfg: &RunConfig) -> Result<Outputs> {
    let tests = load_views(
        &cfg.path_list("io.test_views", "test_view", "mtx"),
        false,
        cfg.scale()?,
        "test views",
    )?;
    let qs = load_factors(cfg)?;
    let res = evaluate_pairs(&tests, &qs)?;
    Ok(vec![("pairs.csv".into(), pairs_csv_string(&res))])
}

pub fn cmd_hash(cfg: &RunConfig) -> Result<Outputs> {
    let spec = cfg.hash_spec()?;
    if !cfg.is_set("io.documents") {
        return Err(Error::Config("io.documents must name a text file".into()));
    }
    let path = cfg.path_or_default("io.documents", "");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let x = hash_documents(&text, &spec)?;
    Ok(vec![("hashed.mtx".into(), matrix_market_string(&x))])
}
