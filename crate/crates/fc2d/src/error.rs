//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, FcError>;

#[derive(Debug, Error)]
pub enum FcError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("Newton iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("decomposition validation failed:\n{0}")]
    Validation(String),

    #[error("mask inconsistency: {0}")]
    MaskInconsistency(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed operator file: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
