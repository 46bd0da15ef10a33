//! Python bindings. Dense matrices cross the boundary as lists of row lists.

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sumcor::linalg::{DenseMat, SparseView};
use sumcor::regularizers::{RegKind, Regularizer};
use sumcor::retrieval::{self, HashSpec};
use sumcor::solver::{self, SolverConfig, SolverMode};
use sumcor::synth::{self, SynthSpec};
use sumcor::Error;

fn to_py(e: Error) -> PyErr {
    match e.exit_code() {
        3 => PyArithmeticError::new_err(e.to_string()),
        4 => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

type Rows = Vec<Vec<f64>>;

fn dense(rows: Rows) -> PyResult<DenseMat> {
    DenseMat::from_rows(&rows).map_err(to_py)
}

#[pyclass(name = "SparseView", module = "sumcor_py", skip_from_py_object)]
#[derive(Clone)]
struct PySparseView {
    inner: SparseView,
}

#[pymethods]
impl PySparseView {
    /// Build from `(row, col, value)` triplets (0-based).
    #[staticmethod]
    fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: Vec<(usize, usize, f64)>,
    ) -> PyResult<Self> {
        Ok(PySparseView {
            inner: SparseView::from_triplets(rows, cols, triplets).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_dense(rows: Rows) -> PyResult<Self> {
        Ok(PySparseView {
            inner: SparseView::from_dense(&dense(rows)?).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn identity(n: usize) -> PyResult<Self> {
        Ok(PySparseView {
            inner: SparseView::identity(n).map_err(to_py)?,
        })
    }

    /// Read a Matrix Market coordinate file.
    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(PySparseView {
            inner: sumcor::io::read_matrix_market(path).map_err(to_py)?,
        })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        sumcor::io::write_matrix_market(path, &self.inner).map_err(to_py)
    }

    /// Copy with implicit column centering.
    fn centered(&self) -> Self {
        PySparseView {
            inner: self.inner.clone().centered(),
        }
    }

    /// Copy with the `1/sqrt(L)` factor switched on or off.
    fn with_scaling(&self, on: bool) -> Self {
        PySparseView {
            inner: self.inner.clone().with_scaling(on),
        }
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.rows(), self.inner.cols())
    }

    #[getter]
    fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    #[getter]
    fn density(&self) -> f64 {
        self.inner.density()
    }

    fn to_dense(&self) -> Rows {
        self.inner.to_dense().to_rows()
    }

    /// `X · D` with centering and scaling applied.
    fn matmul(&self, d: Rows) -> PyResult<Rows> {
        Ok(self.inner.spmm_right(&dense(d)?).map_err(to_py)?.to_rows())
    }

    /// `Xᵀ · D` with centering and scaling applied.
    fn rmatmul_t(&self, d: Rows) -> PyResult<Rows> {
        Ok(self.inner.spmm_left_t(&dense(d)?).map_err(to_py)?.to_rows())
    }

    fn __repr__(&self) -> String {
        format!(
            "SparseView(shape=({}, {}), nnz={})",
            self.inner.rows(),
            self.inner.cols(),
            self.inner.nnz()
        )
    }
}

#[pyclass(name = "Regularizer", module = "sumcor_py", skip_from_py_object)]
#[derive(Clone)]
struct PyRegularizer {
    inner: Regularizer,
}

#[pymethods]
impl PyRegularizer {
    /// `kind` is one of none, l1, l21, elastic_l1, elastic_l21, nonneg.
    #[new]
    #[pyo3(signature = (kind = "none", lam = 0.0, mu = 0.0))]
    fn new(kind: &str, lam: f64, mu: f64) -> PyResult<Self> {
        let kind: RegKind = kind.parse().map_err(to_py)?;
        Ok(PyRegularizer {
            inner: Regularizer::new(kind, lam, mu).map_err(to_py)?,
        })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().as_str()
    }

    fn penalty_value(&self, q: Rows) -> PyResult<f64> {
        self.inner.penalty_value(&dense(q)?).map_err(to_py)
    }

    /// `argmin_Q ‖Q − V‖² + tau · penalty(Q)`.
    fn prox(&self, v: Rows, tau: f64) -> PyResult<Rows> {
        Ok(self.inner.prox(&dense(v)?, tau).map_err(to_py)?.to_rows())
    }

    fn __repr__(&self) -> String {
        format!(
            "Regularizer(kind={:?}, lam={}, mu={})",
            self.inner.kind().as_str(),
            self.inner.lambda(),
            self.inner.mu()
        )
    }
}

#[pyclass(name = "Solution", module = "sumcor_py")]
struct PySolution {
    inner: solver::Solution,
}

#[pymethods]
impl PySolution {
    /// Factors `Q_i`, one `M_i x K` matrix per view.
    #[getter]
    fn factors(&self) -> Vec<Rows> {
        self.inner
            .state
            .blocks
            .iter()
            .map(|b| b.q.to_rows())
            .collect()
    }

    /// Orthonormal latents `G_i`, one `L x K` matrix per view.
    #[getter]
    fn latents(&self) -> Vec<Rows> {
        self.inner
            .state
            .blocks
            .iter()
            .map(|b| b.g.to_rows())
            .collect()
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.stop == solver::StopReason::Converged
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.state.rho
    }

    /// One dict per trace row.
    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .trace
            .iter()
            .map(|t| {
                let d = PyDict::new(py);
                d.set_item("iter", t.iter)?;
                d.set_item("seconds", t.seconds)?;
                d.set_item("rho", t.rho)?;
                d.set_item("primal_residual", t.primal_residual)?;
                d.set_item("lagrangian", t.lagrangian)?;
                d.set_item("total_correlation", t.total_correlation)?;
                d.set_item("penalty_increased", t.penalty_increased)?;
                Ok(d)
            })
            .collect()
    }

    fn trace_csv(&self) -> String {
        solver::trace_csv_string(&self.inner.trace)
    }
}

fn views_of(views: &[PyRef<'_, PySparseView>]) -> Vec<SparseView> {
    views.iter().map(|v| v.inner.clone()).collect()
}

fn dense_list(ms: Vec<Rows>) -> PyResult<Vec<DenseMat>> {
    ms.into_iter().map(dense).collect()
}

/// Fit the regularized multiview CCA. `regs` may hold one regularizer for all views or one
/// per view.
#[pyfunction]
#[pyo3(signature = (
    views, k = 5, regs = Vec::new(), mode = "pdd", rho0 = 2.0, c = 0.9, eta0 = 100.0, eps0 = 1e-2,
    sub_max_sweeps = 5, outer_max = 500, tol_change = 1e-6, seed = 0, record_time = true
))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    views: Vec<PyRef<'_, PySparseView>>,
    k: usize,
    regs: Vec<PyRef<'_, PyRegularizer>>,
    mode: &str,
    rho0: f64,
    c: f64,
    eta0: f64,
    eps0: f64,
    sub_max_sweeps: usize,
    outer_max: usize,
    tol_change: f64,
    seed: u64,
    record_time: bool,
) -> PyResult<PySolution> {
    let config = SolverConfig {
        k,
        rho0,
        c,
        eta0,
        eps0,
        sub_max_sweeps,
        outer_max,
        tol_change,
        seed,
        record_time,
        mode: mode.parse::<SolverMode>().map_err(to_py)?,
        ..SolverConfig::default()
    };
    let views = views_of(&views);
    let regs: Vec<Regularizer> = regs.iter().map(|r| r.inner).collect();
    let inner = py
        .detach(|| solver::solve(&views, &config, &regs, None))
        .map_err(to_py)?;
    Ok(PySolution { inner })
}

#[pyfunction]
fn polar_factor(m: Rows) -> PyResult<Rows> {
    Ok(sumcor::linalg::polar_factor(&dense(m)?)
        .map_err(to_py)?
        .to_rows())
}

/// Clean shared-factor views `X_i = S·A_i`.
#[pyfunction]
#[pyo3(signature = (rows, features, views = 3, density = 2e-2, seed = 0))]
fn gen_shared_factor(
    rows: usize,
    features: usize,
    views: usize,
    density: f64,
    seed: u64,
) -> PyResult<Vec<PySparseView>> {
    let spec = SynthSpec {
        rows,
        features,
        views,
        density,
        seed,
        ..SynthSpec::default()
    };
    Ok(synth::gen_shared_factor(&spec)
        .map_err(to_py)?
        .into_iter()
        .map(|inner| PySparseView { inner })
        .collect())
}

/// Views with appended outlier features; returns `(views, signal_columns, outlier_columns)`.
#[pyfunction]
#[pyo3(signature = (rows, features, outliers, views = 3, density = 2e-2, noise_var = 0.01, seed = 0))]
fn gen_with_outliers(
    rows: usize,
    features: usize,
    outliers: usize,
    views: usize,
    density: f64,
    noise_var: f64,
    seed: u64,
) -> PyResult<(Vec<PySparseView>, Vec<usize>, Vec<usize>)> {
    let spec = SynthSpec {
        rows,
        features,
        outliers,
        views,
        density,
        noise_var,
        seed,
        ..SynthSpec::default()
    };
    let (xs, sets) = synth::gen_with_outliers(&spec).map_err(to_py)?;
    Ok((
        xs.into_iter().map(|inner| PySparseView { inner }).collect(),
        sets.signal,
        sets.outlier,
    ))
}

/// `(raw, percent)` total pairwise correlation of the canonical variates.
#[pyfunction]
fn total_correlation(
    views: Vec<PyRef<'_, PySparseView>>,
    factors: Vec<Rows>,
) -> PyResult<(f64, f64)> {
    synth::total_correlation(&views_of(&views), &dense_list(factors)?).map_err(to_py)
}

#[pyfunction]
fn metric1(
    views: Vec<PyRef<'_, PySparseView>>,
    factors: Vec<Rows>,
    signal: Vec<usize>,
) -> PyResult<f64> {
    synth::metric1(&views_of(&views), &dense_list(factors)?, &signal).map_err(to_py)
}

#[pyfunction]
fn metric2(factors: Vec<Rows>, outlier: Vec<usize>) -> PyResult<f64> {
    synth::metric2(&dense_list(factors)?, &outlier).map_err(to_py)
}

/// Signed hashing of one token list; returns sorted `(slot, value)` pairs.
#[pyfunction]
#[pyo3(signature = (tokens, bits = 19, seed = 0))]
fn hash_featurize(tokens: Vec<String>, bits: u32, seed: u64) -> PyResult<Vec<(usize, f64)>> {
    let spec = HashSpec::new(bits, seed).map_err(to_py)?;
    Ok(retrieval::hash_featurize(&tokens, &spec).entries)
}

/// One document per line, hashed into a `lines x 2^bits` view.
#[pyfunction]
#[pyo3(signature = (text, bits = 19, seed = 0))]
fn hash_documents(text: &str, bits: u32, seed: u64) -> PyResult<PySparseView> {
    let spec = HashSpec::new(bits, seed).map_err(to_py)?;
    Ok(PySparseView {
        inner: retrieval::hash_documents(text, &spec).map_err(to_py)?,
    })
}

/// Retrieval scores over every ordered view pair: a dict with `pairs` (list of
/// `(i, j, aroc, nn_freq)`), `mean_aroc` and `mean_nn_freq`.
#[pyfunction]
fn evaluate_pairs<'py>(
    py: Python<'py>,
    test_views: Vec<PyRef<'_, PySparseView>>,
    factors: Vec<Rows>,
) -> PyResult<Bound<'py, PyDict>> {
    let res =
        retrieval::evaluate_pairs(&views_of(&test_views), &dense_list(factors)?).map_err(to_py)?;
    let d = PyDict::new(py);
    let pairs: Vec<(usize, usize, f64, f64)> = res
        .pairs
        .iter()
        .map(|p| (p.i, p.j, p.aroc, p.nn_freq))
        .collect();
    d.set_item("pairs", pairs)?;
    d.set_item("mean_aroc", res.mean_aroc)?;
    d.set_item("mean_nn_freq", res.mean_nn_freq)?;
    Ok(d)
}

#[pymodule]
fn sumcor_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySparseView>()?;
    m.add_class::<PyRegularizer>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(polar_factor, m)?)?;
    m.add_function(wrap_pyfunction!(gen_shared_factor, m)?)?;
    m.add_function(wrap_pyfunction!(gen_with_outliers, m)?)?;
    m.add_function(wrap_pyfunction!(total_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(metric1, m)?)?;
    m.add_function(wrap_pyfunction!(metric2, m)?)?;
    m.add_function(wrap_pyfunction!(hash_featurize, m)?)?;
    m.add_function(wrap_pyfunction!(hash_documents, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_pairs, m)?)?;
    Ok(())
}
