use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{DenseMat, SparseView};

pub const DEFAULT_POWER_ITERS: usize = 100;
pub const DEFAULT_POWER_SEED: u64 = 0x5eed;

/// Power-iteration estimate of `σ_max(X)²`, i.e. `‖XᵀX‖₂`.
///
/// Returns the Rayleigh quotient `‖X·v‖²` of the last unit iterate, which never exceeds the
/// true value and is nondecreasing in `iters`.
pub fn spectral_norm_sq(x: &SparseView, iters: usize, seed: u64) -> Result<f64> {
    if iters == 0 {
        return Err(Error::InvalidArgument(
            "power iteration needs iters >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DenseMat::from_fn(x.cols(), 1, |_, _| StandardNormal.sample(&mut rng));
    normalize(&mut v);
    let mut estimate = 0.0;
    for _ in 0..iters {
        let xv = x.spmm_right(&v)?;
        estimate = xv.frob_norm_sq();
        let mut next = x.spmm_left_t(&xv)?;
        if normalize(&mut next) == 0.0 {
            break;
        }
        v = next;
    }
    Ok(estimate)
}

fn normalize(v: &mut DenseMat) -> f64 {
    let n = v.frob_norm();
    if n > 0.0 {
        v.scale(1.0 / n);
    }
    n
}
