use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {diff:e}")]
    Asymmetric { row: usize, col: usize, diff: f64 },

    #[error("matrix is not positive definite: pivot {pivot} = {value:e} (threshold {threshold:e})")]
    NotPositiveDefinite { pivot: usize, value: f64, threshold: f64 },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("adaptive quadrature exceeded max depth; partial estimate {estimate}")]
    MaxDepth { estimate: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
