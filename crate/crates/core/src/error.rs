use std::io;

use thiserror::Error;

/// Errors reported by the decomposition routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("data length {len} does not match {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dictionary columns are not orthonormal (max |A^T A - I| = {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("SVD did not converge on a {rows}x{cols} matrix")]
    SvdConvergence { rows: usize, cols: usize },

    #[error("solver diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: usize, detail: String },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { what: &'static str, iterations: usize, residual: f64 },

    #[error("recovered seed matrix has rank zero")]
    SeedRankZero,

    #[error("matrix format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension { op, detail: detail.into() }
    }
}
