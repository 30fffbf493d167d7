//! Error taxonomy shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid construction parameters (bad Cartan data, bad tau, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Input outside the numerically trusted region.
    #[error("range error: {0}")]
    Range(String),

    /// A configured size cap would be exceeded.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Structurally incompatible operands (normal forms, module kinds, ...).
    #[error("shape error: {0}")]
    Shape(String),

    /// Arguments violate a documented precondition.
    #[error("input error: {0}")]
    Input(String),

    /// Evaluation refused to invert a theta factor whose argument is within
    /// 1e-8 of the period lattice; names the factor so the caller can
    /// resample the point.
    #[error("pole: factor {atom} near the period lattice at {point}")]
    Pole { atom: String, point: String },

    /// Numeric verification failed or a solve became ill-conditioned.
    #[error("numeric error: {0}")]
    Numeric(String),
}
