use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("odd dimension {0}: only even sizes are supported")]
    OddDimension(usize),

    #[error("configuration is not strictly increasing at index {index}")]
    NotOrdered { index: usize },

    #[error("matrix is not skew-symmetric: max |a_ij + a_ji| = {deviation:e}")]
    NotSkew { deviation: f64 },

    #[error("quadrature did not converge: estimated error {achieved:e} > tolerance {requested:e}")]
    QuadratureNotConverged { achieved: f64, requested: f64 },

    #[error("ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("integration dimension {dim} exceeds the oracle limit {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("simulation failed: {0}")]
    Simulation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
