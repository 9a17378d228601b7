//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("assembly self-check failed: {0}")]
    Assembly(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("trace fit ill-conditioned (condition {cond:.3e} > {limit:.1e}); refine the mesh")]
    IllConditionedFit { cond: f64, limit: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("precision loss in series recurrence at order {order}: estimated relative error {estimate:.3e}")]
    PrecisionLoss { order: usize, estimate: f64 },

    #[error("gramian unobservable at this precision: all {truncated} spectral directions below cutoff")]
    Unobservable { truncated: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed container: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
