use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::SparseView;

/// Allowed band for `‖O_i‖_F / ‖S·A_i‖_F` in the outlier regime.
pub const ENERGY_BAND: (f64, f64) = (0.95, 1.05);
/// Allowed relative deviation of a clean view's realised density from the target.
pub const DENSITY_TOLERANCE: f64 = 0.2;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    /// Number of samples `L` (rows of every view).
    pub rows: usize,
    /// Signal features `M` per view.
    pub features: usize,
    /// Number of views `I`.
    pub views: usize,
    /// Canonical components the data is meant to be solved with; recorded, not used in generation.
    pub k: usize,
    pub density: f64,
    /// Outlying features `M_o` appended to every view; 0 for the clean regime.
    pub outliers: usize,
    /// Variance of the additive sparse noise (outlier regime only).
    pub noise_var: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            rows: 2000,
            features: 500,
            views: 3,
            k: 5,
            density: 2e-2,
            outliers: 0,
            noise_var: 0.01,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.features == 0 || self.views == 0 || self.k == 0 {
            return Err(Error::InvalidArgument(
                "L, M, I and K must all be positive".into(),
            ));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "density {} must lie in (0, 1]",
                self.density
            )));
        }
        if !(self.noise_var.is_finite() && self.noise_var >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise variance {} must be >= 0",
                self.noise_var
            )));
        }
        Ok(())
    }

    /// Density of `S` and `A_i` such that `S·A_i` hits the target density when supports are
    /// independent: `1 − (1 − p²)^M = density`.
    fn factor_density(&self) -> f64 {
        let per_term = 1.0 - (1.0 - self.density).powf(1.0 / self.features as f64);
        per_term.sqrt().min(1.0)
    }
}

/// Signal and outlier column sets, shared by every view.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSets {
    pub signal: Vec<usize>,
    pub outlier: Vec<usize>,
}

impl IndexSets {
    pub fn all_signal(cols: usize) -> Self {
        IndexSets {
            signal: (0..cols).collect(),
            outlier: Vec::new(),
        }
    }

    /// Two lines: signal then outlier column indices (0-based), space separated.
    pub fn to_file_string(&self) -> String {
        let join = |v: &[usize]| {
            v.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!("{}\n{}\n", join(&self.signal), join(&self.outlier))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut next = || -> Result<Vec<usize>> {
            lines
                .next()
                .unwrap_or("")
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|e| Error::Config(format!("bad index {t:?}: {e}")))
                })
                .collect()
        };
        let signal = next()?;
        let outlier = next()?;
        let sets = IndexSets { signal, outlier };
        if sets.signal.iter().any(|c| sets.outlier.contains(c)) {
            return Err(Error::Config(
                "signal and outlier index sets overlap".into(),
            ));
        }
        Ok(sets)
    }

    pub fn validate_for(&self, cols: usize) -> Result<()> {
        let mut seen = vec![false; cols];
        for &c in self.signal.iter().chain(&self.outlier) {
            if c >= cols || seen[c] {
                return Err(Error::InvalidArgument(format!(
                    "index sets must partition the {cols} columns (offending index {c})"
                )));
            }
            seen[c] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument(format!(
                "index sets do not cover all {cols} columns"
            )));
        }
        Ok(())
    }
}

/// The shared factor `S` (`L x M`) and the per-view maps `A_i` (`M x M`).
#[derive(Clone, Debug)]
pub struct SharedFactorParts {
    pub shared: SparseView,
    pub maps: Vec<SparseView>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Sparse matrix with `round(density · rows · cols)` cells drawn uniformly without
/// replacement, values from `dist`.
fn random_sparse(
    rows: usize,
    cols: usize,
    density: f64,
    rng: &mut ChaCha8Rng,
    mut value: impl FnMut(&mut ChaCha8Rng) -> f64,
) -> Result<SparseView> {
    let cells = rows * cols;
    let nnz = ((density * cells as f64).round() as usize).min(cells);
    let picked = sample(rng, cells, nnz);
    let mut trip: Vec<(usize, usize, f64)> = picked
        .into_iter()
        .map(|cell| (cell / cols, cell % cols, 0.0))
        .collect();
    // Values are drawn in cell order so they do not depend on the sampler's output order.
    trip.sort_unstable_by_key(|&(r, c, _)| (r, c));
    for t in &mut trip {
        t.2 = value(rng);
    }
    SparseView::from_triplets(rows, cols, trip)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `A·B` for sparse operands, ignoring any centering or scaling flags.
pub fn sparse_product(a: &SparseView, b: &SparseView) -> Result<SparseView> {
    if a.cols() != b.rows() {
        return Err(Error::dim("sparse_product", a.cols(), b.rows()));
    }
    let mut acc = vec![0.0; b.cols()];
    let mut touched = vec![false; b.cols()];
    let mut marks: Vec<usize> = Vec::new();
    let mut trip = Vec::new();
    for r in 0..a.rows() {
        let (a_cols, a_vals) = a.row(r);
        for (&m, &av) in a_cols.iter().zip(a_vals) {
            let (b_cols, b_vals) = b.row(m);
            for (&c, &bv) in b_cols.iter().zip(b_vals) {
                if !touched[c] {
                    touched[c] = true;
                    marks.push(c);
                }
                acc[c] += av * bv;
            }
        }
        marks.sort_unstable();
        for &c in &marks {
            trip.push((r, c, acc[c]));
            acc[c] = 0.0;
            touched[c] = false;
        }
        marks.clear();
    }
    SparseView::from_triplets(a.rows(), b.cols(), trip)
}

pub fn shared_factor_parts(spec: &SynthSpec) -> Result<SharedFactorParts> {
    spec.validate()?;
    let p = spec.factor_density();
    let m = spec.features;
    let expected_s = p * (spec.rows * m) as f64;
    let expected_a = p * (m * m) as f64;
    if expected_s < 1.0 || expected_a < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "density {} is too small for a nonzero product at L={}, M={m}",
            spec.density, spec.rows
        )));
    }
    let shared = random_sparse(spec.rows, m, p, &mut stream(spec.seed, 0), gaussian)?;
    let maps = (0..spec.views)
        .map(|i| random_sparse(m, m, p, &mut stream(spec.seed, 1 + i as u64), gaussian))
        .collect::<Result<Vec<_>>>()?;
    Ok(SharedFactorParts { shared, maps })
}

/// Clean regime: `X_i = S·A_i`, with every view sharing the row space of `S`.
pub fn gen_shared_factor(spec: &SynthSpec) -> Result<Vec<SparseView>> {
    if spec.outliers != 0 {
        return Err(Error::InvalidArgument(
            "clean generator requires zero outlier features; use gen_with_outliers".into(),
        ));
    }
    let parts = shared_factor_parts(spec)?;
    let views = parts
        .maps
        .iter()
        .map(|a| sparse_product(&parts.shared, a))
        .collect::<Result<Vec<_>>>()?;
    for (i, x) in views.iter().enumerate() {
        let rel = (x.density() - spec.density).abs() / spec.density;
        if rel > DENSITY_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "view {i} realised density {:.3e} is more than {}% off the target {:.3e}",
                x.density(),
                DENSITY_TOLERANCE * 100.0,
                spec.density
            )));
        }
    }
    Ok(views)
}

/// Outlier regime: `X_i = [S·A_i, O_i] + N_i`.
///
/// `O_i` has unit-variance Gaussian entries on a random support, independent across views,
/// rescaled so that `‖O_i‖_F = ‖S·A_i‖_F`. `N_i` is sparse Gaussian noise of variance
/// `noise_var` over the whole view. Signal columns come first.
pub fn gen_with_outliers(spec: &SynthSpec) -> Result<(Vec<SparseView>, IndexSets)> {
    if spec.outliers == 0 {
        return Err(Error::InvalidArgument(
            "outlier generator requires outlier features > 0; use gen_shared_factor".into(),
        ));
    }
    let parts = shared_factor_parts(spec)?;
    let (l, m, mo) = (spec.rows, spec.features, spec.outliers);
    let n = spec.views as u64;
    let noise = Normal::new(0.0, spec.noise_var.sqrt())
        .map_err(|e| Error::InvalidArgument(format!("noise distribution: {e}")))?;

    let mut views = Vec::with_capacity(spec.views);
    for (i, a) in parts.maps.iter().enumerate() {
        let signal = sparse_product(&parts.shared, a)?;
        let outlier = random_sparse(
            l,
            mo,
            spec.density,
            &mut stream(spec.seed, 1 + n + i as u64),
            gaussian,
        )?;
        let signal_energy = signal.raw_frob_norm();
        let outlier_energy = outlier.raw_frob_norm();
        if !(signal_energy > 0.0 && outlier_energy > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "view {i}: empty signal or outlier block"
            )));
        }
        let gain = signal_energy / outlier_energy;
        let ratio = outlier_energy * gain / signal_energy;
        if ratio < ENERGY_BAND.0 || ratio > ENERGY_BAND.1 {
            return Err(Error::InvalidArgument(format!(
                "view {i}: energy ratio {ratio} outside band"
            )));
        }
        let mut noise_rng = stream(spec.seed, 1 + 2 * n + i as u64);
        let noise_block =
            random_sparse(l, m + mo, spec.density, &mut noise_rng, |r| noise.sample(r))?;

        let mut trip: Vec<(usize, usize, f64)> = signal
            .triplets()
            .chain(outlier.triplets().map(|(r, c, v)| (r, c + m, v * gain)))
            .chain(noise_block.triplets())
            .collect();
        trip.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(trip.len());
        for (r, c, v) in trip {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        views.push(SparseView::from_triplets(l, m + mo, merged)?);
    }
    let sets = IndexSets {
        signal: (0..m).collect(),
        outlier: (m..m + mo).collect(),
    };
    Ok((views, sets))
}

/// `‖X(:, I_o)‖_F / ‖X(:, I_s)‖_F` of a finished view, noise included.
pub fn block_energy_ratio(view: &SparseView, sets: &IndexSets) -> f64 {
    let mut is_outlier = vec![false; view.cols()];
    sets.outlier.iter().for_each(|&c| is_outlier[c] = true);
    let (mut s, mut o) = (0.0, 0.0);
    for (_, c, v) in view.triplets() {
        if is_outlier[c] {
            o += v * v;
        } else {
            s += v * v;
        }
    }
    (o / s).sqrt()
}
