//! Regularized sum-of-correlations generalized CCA for large sparse multiview data.
//!
//! [`solver::run_pdd`] fits one factor `Q_i` per view so that the canonical variates
//! `X_i·Q_i` are maximally correlated across views, with an optional structural penalty on
//! each `Q_i` from [`regularizers`]. [`synth`] builds benchmark data and scores solutions,
//! [`retrieval`] scores cross-view retrieval on held-out rows, and [`cli`] drives all of it
//! from config files.

pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod regularizers;
pub mod retrieval;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use linalg::{DenseMat, SparseView};
pub use regularizers::{RegKind, Regularizer};
pub use solver::{SolverConfig, SolverMode, SolverState};
