//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// An iterative routine exhausted its iteration budget.
    #[error("convergence failure: {0}")]
    Convergence(String),
    /// Operands live on incompatible sampling or frequency grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// Input is statistically degenerate (constant series, zero reference
    /// ordinate, nonstationary model, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// The requested mode has no supported implementation.
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
