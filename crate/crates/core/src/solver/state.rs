use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{polar_factor, spectral_norm_sq, DenseMat, SparseView};
use crate::regularizers::Regularizer;

/// The per-view variables: factor `Q_i`, latent `G_i`, dual `Y_i` and the cached product
/// `P_i = X_i·Q_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewBlock {
    pub q: DenseMat,
    pub g: DenseMat,
    pub y: DenseMat,
    pub p: DenseMat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub blocks: Vec<ViewBlock>,
    pub rho: f64,
}

impl SolverState {
    pub fn n_views(&self) -> usize {
        self.blocks.len()
    }

    pub fn factors(&self) -> Vec<DenseMat> {
        self.blocks.iter().map(|b| b.q.clone()).collect()
    }

    pub fn latents(&self) -> Vec<DenseMat> {
        self.blocks.iter().map(|b| b.g.clone()).collect()
    }

    pub fn products(&self) -> Vec<&DenseMat> {
        self.blocks.iter().map(|b| &b.p).collect()
    }

    /// Builds a state from explicit factors and latents with zero duals.
    pub fn from_parts(
        views: &[SparseView],
        q: Vec<DenseMat>,
        g: Vec<DenseMat>,
        rho: f64,
    ) -> Result<Self> {
        if q.len() != views.len() || g.len() != views.len() {
            return Err(Error::dim(
                "SolverState::from_parts",
                views.len(),
                q.len().min(g.len()),
            ));
        }
        let blocks = views
            .iter()
            .zip(q.into_iter().zip(g))
            .map(|(x, (q, g))| {
                if g.rows() != x.rows() || g.cols() != q.cols() {
                    return Err(Error::dim(
                        "SolverState::from_parts",
                        format!("{}x{}", x.rows(), q.cols()),
                        format!("{}x{}", g.rows(), g.cols()),
                    ));
                }
                let p = x.spmm_right(&q)?;
                let y = DenseMat::zeros(g.rows(), g.cols());
                Ok(ViewBlock { q, g, y, p })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SolverState { blocks, rho })
    }
}

/// Views bound to their regularizers and cached Lipschitz data.
#[derive(Debug)]
pub struct Problem<'a> {
    views: &'a [SparseView],
    regs: Vec<Regularizer>,
    sigma_sq: Vec<f64>,
    k: usize,
}

impl<'a> Problem<'a> {
    /// `regs` holds either one regularizer shared by every view or one per view.
    pub fn new(
        views: &'a [SparseView],
        regs: &[Regularizer],
        k: usize,
        power_iters: usize,
        power_seed: u64,
    ) -> Result<Self> {
        validate_dimensions(views, k)?;
        let regs = match regs.len() {
            0 => vec![Regularizer::none(); views.len()],
            1 => vec![regs[0]; views.len()],
            n if n == views.len() => regs.to_vec(),
            n => {
                return Err(Error::dim(
                    "Problem::new",
                    format!("1 or {} regularizers", views.len()),
                    n,
                ))
            }
        };
        let sigma_sq = views
            .par_iter()
            .map(|x| spectral_norm_sq(x, power_iters, power_seed))
            .collect::<Result<Vec<_>>>()?;
        Ok(Problem {
            views,
            regs,
            sigma_sq,
            k,
        })
    }

    pub fn views(&self) -> &[SparseView] {
        self.views
    }

    pub fn view(&self, i: usize) -> &SparseView {
        &self.views[i]
    }

    pub fn reg(&self, i: usize) -> &Regularizer {
        &self.regs[i]
    }

    pub fn sigma_sq(&self, i: usize) -> f64 {
        self.sigma_sq[i]
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn rows(&self) -> usize {
        self.views[0].rows()
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Checks the dimension conditions under which every iterate satisfies Robinson's
/// constraint qualification: `mean(M_i) >= (K+1)/2` and `L >= (K+1)/2`.
pub fn validate_dimensions(views: &[SparseView], k: usize) -> Result<()> {
    let first = views
        .first()
        .ok_or_else(|| Error::InvalidArgument("at least one view is required".into()))?;
    if k == 0 {
        return Err(Error::InvalidArgument("K must be >= 1".into()));
    }
    let l = first.rows();
    if let Some((i, x)) = views.iter().enumerate().find(|(_, x)| x.rows() != l) {
        return Err(Error::dim(
            "validate_dimensions",
            format!("{l} rows in every view"),
            format!("{} rows in view {i}", x.rows()),
        ));
    }
    let bound = (k as f64 + 1.0) / 2.0;
    let mean_m = views.iter().map(|x| x.cols() as f64).sum::<f64>() / views.len() as f64;
    if mean_m < bound {
        return Err(Error::Robinson {
            condition: "mean feature count",
            detail: format!("mean(M_i) = {mean_m} < (K+1)/2 = {bound}"),
        });
    }
    if (l as f64) < bound {
        return Err(Error::Robinson {
            condition: "sample count",
            detail: format!("L = {l} < (K+1)/2 = {bound}"),
        });
    }
    Ok(())
}

/// `G_i` = polar factor of a seeded `L x K` Gaussian draw (one RNG stream per view),
/// `Q_i = Y_i = 0`.
pub fn init_random(views: &[SparseView], k: usize, seed: u64) -> Result<SolverState> {
    validate_dimensions(views, k)?;
    let blocks = views
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let draw = DenseMat::from_fn(x.rows(), k, |_, _| StandardNormal.sample(&mut rng));
            Ok(ViewBlock {
                q: DenseMat::zeros(x.cols(), k),
                g: polar_factor(&draw)?,
                y: DenseMat::zeros(x.rows(), k),
                p: DenseMat::zeros(x.rows(), k),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SolverState { blocks, rho: 0.0 })
}
