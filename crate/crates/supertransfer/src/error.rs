//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Structural mismatch between declared sizes and supplied data.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A parameter violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An `ExcitonState` fails trace/Hermiticity/normalization checks.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Nonlinear fitting could not produce a usable result.
    #[error("fit failure: {0}")]
    FitFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
