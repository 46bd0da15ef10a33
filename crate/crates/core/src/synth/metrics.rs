use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{DenseMat, SparseView};
use crate::solver::TraceRow;

/// Normaliser turning a pairwise correlation sum into a percentage: the value `K·I·(I−1)`
/// attained when every `X_i·Q_i` is the same orthonormal matrix.
fn ideal(k: usize, n_views: usize) -> f64 {
    (k * n_views * n_views.saturating_sub(1)) as f64
}

fn percent(raw: f64, k: usize, n_views: usize) -> f64 {
    let denom = ideal(k, n_views);
    if denom == 0.0 {
        0.0
    } else {
        100.0 * raw / denom
    }
}

/// `Σ_i Σ_{j≠i} ⟨P_i, P_j⟩` over cached products `P_i = X_i·Q_i`, as `(raw, percent)`.
/// Pairs are summed for `j > i` in index order and doubled.
pub fn correlation_from_products(products: &[&DenseMat], k: usize) -> (f64, f64) {
    let n = products.len();
    let half: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| products[i].dot(products[j]))
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let raw = 2.0 * half;
    (raw, percent(raw, k, n))
}

fn check_factors(views: &[SparseView], qs: &[DenseMat]) -> Result<usize> {
    if views.len() != qs.len() {
        return Err(Error::dim("factors", views.len(), qs.len()));
    }
    let k = qs.first().map_or(0, DenseMat::cols);
    for (x, q) in views.iter().zip(qs) {
        if q.rows() != x.cols() || q.cols() != k {
            return Err(Error::dim(
                "factors",
                format!("{}x{k}", x.cols()),
                format!("{}x{}", q.rows(), q.cols()),
            ));
        }
    }
    Ok(k)
}

/// Total pairwise correlation of the canonical variates `X_i·Q_i`, as `(raw, percent)`.
pub fn total_correlation(views: &[SparseView], qs: &[DenseMat]) -> Result<(f64, f64)> {
    let k = check_factors(views, qs)?;
    let products = views
        .par_iter()
        .zip(qs)
        .map(|(x, q)| x.spmm_right(q))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&DenseMat> = products.iter().collect();
    Ok(correlation_from_products(&refs, k))
}

/// Percentage of the ideal correlation captured through the signal columns only: `Q_i` rows
/// outside `signal` are treated as zero.
pub fn metric1(views: &[SparseView], qs: &[DenseMat], signal: &[usize]) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::InvalidArgument("signal index set is empty".into()));
    }
    check_factors(views, qs)?;
    let masked = views
        .iter()
        .zip(qs)
        .map(|(x, q)| {
            let mut m = DenseMat::zeros(q.rows(), q.cols());
            for &c in signal {
                if c >= q.rows() {
                    return Err(Error::InvalidArgument(format!(
                        "signal index {c} out of range for {} columns",
                        x.cols()
                    )));
                }
                m.row_mut(c).copy_from_slice(q.row(c));
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(total_correlation(views, &masked)?.1)
}

/// `Σ_i ‖Q_i(I_o, :)‖_F`; zero exactly when no outlier feature is used.
pub fn metric2(qs: &[DenseMat], outlier: &[usize]) -> Result<f64> {
    qs.iter()
        .map(|q| {
            let mut sq = 0.0;
            for &c in outlier {
                if c >= q.rows() {
                    return Err(Error::InvalidArgument(format!(
                        "outlier index {c} out of range for {} rows",
                        q.rows()
                    )));
                }
                sq += q.row(c).iter().map(|v| v * v).sum::<f64>();
            }
            Ok(sq.sqrt())
        })
        .sum()
}

/// Seconds at the first trace row whose correlation reaches `fraction` of the ideal.
pub fn time_to_fraction(trace: &[TraceRow], fraction: f64) -> Result<Option<f64>> {
    if trace.is_empty() {
        return Err(Error::InvalidArgument("trace is empty".into()));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "fraction {fraction} must lie in (0, 1]"
        )));
    }
    Ok(trace
        .iter()
        .find(|t| t.total_correlation >= fraction * 100.0)
        .map(|t| t.seconds))
}
