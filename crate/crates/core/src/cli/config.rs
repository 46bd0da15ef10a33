use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::regularizers::{RegKind, Regularizer};
use crate::retrieval::HashSpec;
use crate::solver::{SolverConfig, SolverMode};
use crate::synth::SynthSpec;

/// Every fixed key with its default. Per-view regularizer keys `reg.<i>.{kind,lambda,mu}`
/// (1-based `i`) are accepted on top of these.
const DEFAULTS: &[(&str, &str)] = &[
    ("hash.bits", "19"),
    ("hash.seed", "0"),
    ("io.center", "false"),
    ("io.documents", ""),
    ("io.index_sets", ""),
    ("io.input", "."),
    ("io.q", ""),
    ("io.scale", "false"),
    ("io.test_views", ""),
    ("io.timing", "wall"),
    ("io.trace", ""),
    ("io.views", ""),
    ("reg.kind", "none"),
    ("reg.lambda", "0"),
    ("reg.mu", "0"),
    ("solver.c", "0.9"),
    ("solver.eps0", "0.01"),
    ("solver.eta0", "100"),
    ("solver.k", "5"),
    ("solver.mode", "pdd"),
    ("solver.outer_max", "500"),
    ("solver.power_iters", "100"),
    ("solver.power_seed", "24301"),
    ("solver.q_steps", "1"),
    ("solver.rho0", "2"),
    ("solver.safety", "0.9"),
    ("solver.seed", "0"),
    ("solver.sub_max_sweeps", "5"),
    ("solver.tol_change", "1e-6"),
    ("solver.tol_feas", "auto"),
    ("synth.density", "0.02"),
    ("synth.features", "500"),
    ("synth.k", "5"),
    ("synth.noise_var", "0.01"),
    ("synth.outliers", "0"),
    ("synth.rows", "2000"),
    ("synth.seed", "0"),
    ("synth.views", "3"),
];

const SEED_KEYS: &[&str] = &["hash.seed", "solver.seed", "synth.seed"];

/// Flat `key = value` configuration with defaults filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            values: DEFAULTS
                .iter()
                .map(|&(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

fn per_view_reg_key(key: &str) -> bool {
    let parts: Vec<&str> = key.split('.').collect();
    matches!(parts.as_slice(), ["reg", idx, "kind" | "lambda" | "mu"] if idx.parse::<usize>().is_ok_and(|i| i >= 1))
}

impl RunConfig {
    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected key = value, got {raw:?}",
                    no + 1
                ))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !self.values.contains_key(key) && !per_view_reg_key(key) {
            return Err(Error::Config(format!("unknown config key {key:?}")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {pair:?} is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    /// Sets every seed key at once.
    pub fn override_seed(&mut self, seed: u64) {
        for k in SEED_KEYS {
            self.values.insert(k.to_string(), seed.to_string());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn raw(&self, key: &str) -> &str {
        self.get(key)
            .unwrap_or_else(|| panic!("config key {key} has no default"))
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key);
        v.parse::<T>()
            .map_err(|e| Error::Config(format!("{key} = {v:?}: {e}")))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            "true" | "1" | "yes" | "on" => Ok(true),
            "false" | "0" | "no" | "off" => Ok(false),
            v => Err(Error::Config(format!("{key} = {v:?}: expected a boolean"))),
        }
    }

    /// The fully resolved config, one sorted `key = value` line per entry.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Only the `synth.*` entries.
    pub fn synth_echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.values.iter().filter(|(k, _)| k.starts_with("synth.")) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let tol_feas = match self.raw("solver.tol_feas") {
            "auto" | "" => None,
            _ => Some(self.parsed("solver.tol_feas")?),
        };
        let record_time = match self.raw("io.timing") {
            "wall" => true,
            "none" => false,
            v => {
                return Err(Error::Config(format!(
                    "io.timing = {v:?}: expected wall or none"
                )))
            }
        };
        let cfg = SolverConfig {
            k: self.parsed("solver.k")?,
            rho0: self.parsed("solver.rho0")?,
            c: self.parsed("solver.c")?,
            eta0: self.parsed("solver.eta0")?,
            eps0: self.parsed("solver.eps0")?,
            sub_max_sweeps: self.parsed("solver.sub_max_sweeps")?,
            q_steps: self.parsed("solver.q_steps")?,
            outer_max: self.parsed("solver.outer_max")?,
            tol_feas,
            tol_change: self.parsed("solver.tol_change")?,
            safety: self.parsed("solver.safety")?,
            power_iters: self.parsed("solver.power_iters")?,
            power_seed: self.parsed("solver.power_seed")?,
            mode: self.parsed::<SolverMode>("solver.mode")?,
            seed: self.parsed("solver.seed")?,
            record_time,
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    fn regularizer_at(&self, prefix: &str, fallback: Option<Regularizer>) -> Result<Regularizer> {
        let key = |field: &str| format!("{prefix}.{field}");
        let pick =
            |field: &str, base: String| self.get(&key(field)).map(str::to_string).unwrap_or(base);
        let (kind0, lambda0, mu0) = match fallback {
            Some(r) => (
                r.kind().to_string(),
                r.lambda().to_string(),
                r.mu().to_string(),
            ),
            None => ("none".into(), "0".into(), "0".into()),
        };
        let kind: RegKind = pick("kind", kind0)
            .parse()
            .map_err(|e| Error::Config(format!("{}: {e}", key("kind"))))?;
        let num = |field: &str, base: String| -> Result<f64> {
            let v = pick(field, base);
            v.parse()
                .map_err(|e| Error::Config(format!("{} = {v:?}: {e}", key(field))))
        };
        let lambda = num("lambda", lambda0)?;
        let mu = num("mu", mu0)?;
        Regularizer::new(kind, lambda, mu).map_err(|e| Error::Config(e.to_string()))
    }

    /// One regularizer per view: `reg.<i>.*` entries override the shared `reg.*` ones.
    pub fn regularizers(&self, n_views: usize) -> Result<Vec<Regularizer>> {
        let shared = self.regularizer_at("reg", None)?;
        for k in self.values.keys().filter(|k| per_view_reg_key(k)) {
            let idx: usize = k
                .split('.')
                .nth(1)
                .and_then(|s| s.parse().ok())
                .unwrap_or(0);
            if idx > n_views {
                return Err(Error::Config(format!(
                    "{k} refers to view {idx} but only {n_views} views are loaded"
                )));
            }
        }
        (1..=n_views)
            .map(|i| self.regularizer_at(&format!("reg.{i}"), Some(shared)))
            .collect()
    }

    pub fn synth_spec(&self) -> Result<SynthSpec> {
        let spec = SynthSpec {
            rows: self.parsed("synth.rows")?,
            features: self.parsed("synth.features")?,
            views: self.parsed("synth.views")?,
            k: self.parsed("synth.k")?,
            density: self.parsed("synth.density")?,
            outliers: self.parsed("synth.outliers")?,
            noise_var: self.parsed("synth.noise_var")?,
            seed: self.parsed("synth.seed")?,
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }

    pub fn hash_spec(&self) -> Result<HashSpec> {
        HashSpec::new(self.parsed("hash.bits")?, self.parsed("hash.seed")?)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn center(&self) -> Result<bool> {
        self.flag("io.center")
    }

    pub fn scale(&self) -> Result<bool> {
        self.flag("io.scale")
    }

    pub fn input_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("io.input"))
    }

    /// Comma-separated path list under `key`, or `<io.input>/<stem>_<i>.<ext>` for
    /// `i = 1, 2, ...` while such files exist.
    pub fn path_list(&self, key: &str, stem: &str, ext: &str) -> Vec<PathBuf> {
        let listed = self.raw(key);
        if !listed.is_empty() {
            return listed.split(',').map(|p| PathBuf::from(p.trim())).collect();
        }
        let dir = self.input_dir();
        (1..)
            .map(|i| dir.join(format!("{stem}_{i}.{ext}")))
            .take_while(|p| p.exists())
            .collect()
    }

    /// Path under `key`, or `<io.input>/<default_name>`.
    pub fn path_or_default(&self, key: &str, default_name: &str) -> PathBuf {
        match self.raw(key) {
            "" => self.input_dir().join(default_name),
            p => PathBuf::from(p),
        }
    }

    /// Whether `key` was set to a non-empty value.
    pub fn is_set(&self, key: &str) -> bool {
        !self.raw(key).is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let cfg = RunConfig::default();
        let solver = cfg.solver_config().unwrap();
        assert_eq!(solver, SolverConfig::default());
        assert_eq!(cfg.synth_spec().unwrap(), SynthSpec::default());
        assert_eq!(cfg.hash_spec().unwrap(), HashSpec::default());
        assert_eq!(cfg.regularizers(2).unwrap(), vec![Regularizer::none(); 2]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("solver.kk = 3").is_err());
        assert!(RunConfig::parse("reg.0.kind = l1").is_err());
        assert!(RunConfig::parse("just text").is_err());
        assert!(RunConfig::parse("# comment\n\nsolver.k = 3 # trailing\n").is_ok());
    }

    #[test]
    fn per_view_regularizers_override_shared() {
        let cfg = RunConfig::parse(
            "reg.kind = l21\nreg.lambda = 0.1\nreg.2.kind = l1\nreg.2.lambda = 0.5\n",
        )
        .unwrap();
        let regs = cfg.regularizers(3).unwrap();
        assert_eq!(regs[0], Regularizer::l21(0.1).unwrap());
        assert_eq!(regs[1], Regularizer::l1(0.5).unwrap());
        assert_eq!(regs[2], Regularizer::l21(0.1).unwrap());
        assert!(cfg.regularizers(1).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::parse("solver.mode = admm\nio.timing = none\n").unwrap();
        cfg.override_seed(9);
        let back = RunConfig::parse(&cfg.to_file_string()).unwrap();
        assert_eq!(back, cfg);
        let s = back.solver_config().unwrap();
        assert_eq!(s.mode, SolverMode::Admm);
        assert_eq!(s.seed, 9);
        assert!(!s.record_time);
        assert!(cfg.synth_echo().lines().all(|l| l.starts_with("synth.")));
    }

    #[test]
    fn bad_values_are_config_errors() {
        let cfg = RunConfig::parse("solver.k = five").unwrap();
        assert!(matches!(cfg.solver_config(), Err(Error::Config(_))));
        let cfg = RunConfig::parse("io.center = maybe").unwrap();
        assert!(cfg.center().is_err());
    }
}
