use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("aspect ratio must satisfy a > 1 + 1e-9, got {0}")]
    AspectRatio(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge after {points} points (last two values {previous:e}, {last:e})")]
    QuadratureNonConvergence {
        points: usize,
        previous: f64,
        last: f64,
    },

    #[error("index {index} outside the {kind} range of the basis")]
    IndexOutOfRange { index: i64, kind: &'static str },

    #[error("matrix is not Hermitian: max |H - H^dagger| = {residual:e}")]
    NotHermitian { residual: f64 },

    #[error("operator basis does not match the spectrum basis")]
    BasisMismatch,

    #[error("eigensolver failed to converge")]
    EigenNonConvergence,

    #[error("no significant periodicity found: {0}")]
    NoPeriod(String),

    #[error("segmentation failed: {0}")]
    Segmentation(String),

    #[error("k coefficients have the wrong sign pattern: {0}")]
    SignPattern(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
