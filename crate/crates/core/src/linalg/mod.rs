//! Sparse and thin-dense matrix kernels.

mod dense;
mod polar;
mod power;
mod sparse;

pub use dense::DenseMat;
pub use polar::{polar_factor, RANK_TOL};
pub use power::{spectral_norm_sq, DEFAULT_POWER_ITERS, DEFAULT_POWER_SEED};
pub use sparse::SparseView;
