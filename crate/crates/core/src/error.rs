use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    Dimension {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "rank-deficient polar input (smallest Gram eigenvalue {min_eig:e}, largest {max_eig:e})"
    )]
    RankDeficient { min_eig: f64, max_eig: f64 },

    #[error("empty view {0}: spectral norm is zero")]
    EmptyView(usize),

    #[error("Robinson precondition failed ({condition}): {detail}")]
    Robinson {
        condition: &'static str,
        detail: String,
    },

    #[error(
        "step size violation: augmented Lagrangian rose from {before} to {after} in sweep {sweep}"
    )]
    StepSizeViolation {
        sweep: usize,
        before: f64,
        after: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error in {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(op: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Dimension {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2: configuration or dimension precondition, 3: numeric failure, 4: I/O or file format.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::Robinson { .. } => 2,
            Error::Dimension { .. } => 2,
            Error::NonFinite(_)
            | Error::RankDeficient { .. }
            | Error::EmptyView(_)
            | Error::StepSizeViolation { .. } => 3,
            Error::Parse { .. } | Error::Io { .. } => 4,
        }
    }
}
