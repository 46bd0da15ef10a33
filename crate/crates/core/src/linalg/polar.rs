use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::linalg::DenseMat;

/// Gram eigenvalues at or below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-14;

/// Orthonormal polar factor `U·Vᵀ` of a tall `L x K` matrix `M = U·Σ·Vᵀ`.
///
/// The economy SVD is taken through the `K x K` Gram matrix: with `MᵀM = V·Λ·Vᵀ` the polar
/// factor is `M·V·Λ^{-1/2}·Vᵀ`, costing `O(LK² + K³)`. Squaring the condition number costs
/// accuracy in the orthonormality of the result, so the map is applied a second time to the
/// (already nearly orthonormal) output, which restores `GᵀG = I` to rounding level.
pub fn polar_factor(m: &DenseMat) -> Result<DenseMat> {
    let (l, k) = m.shape();
    if k == 0 || l < k {
        return Err(Error::dim(
            "polar_factor",
            "L >= K >= 1".to_string(),
            format!("{l}x{k}"),
        ));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("polar_factor"));
    }
    let first = gram_polar(m)?;
    gram_polar(&first)
}

fn gram_polar(m: &DenseMat) -> Result<DenseMat> {
    let k = m.cols();
    let mut gram = m.t_matmul(m)?;
    for i in 0..k {
        for j in (i + 1)..k {
            let avg = 0.5 * (gram.get(i, j) + gram.get(j, i));
            gram.set(i, j, avg);
            gram.set(j, i, avg);
        }
    }
    let eig = SymmetricEigen::new(gram.to_nalgebra());
    let max_eig = eig.eigenvalues.max();
    let min_eig = eig.eigenvalues.min();
    if max_eig.is_nan() || max_eig <= 0.0 || min_eig <= RANK_TOL * max_eig {
        return Err(Error::RankDeficient { min_eig, max_eig });
    }
    let v = &eig.eigenvectors;
    let inv_sqrt = DenseMat::from_fn(k, k, |i, j| {
        (0..k)
            .map(|e| v[(i, e)] * v[(j, e)] / eig.eigenvalues[e].sqrt())
            .sum()
    });
    m.matmul(&inv_sqrt)
}
