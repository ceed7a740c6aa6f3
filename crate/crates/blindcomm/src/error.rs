use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its legal range (non-positive count, k > n, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An edge probability or intensity leaves [0, 1] after scaling.
    #[error("invalid probability: {0}")]
    InvalidProbability(String),

    /// Vector/matrix shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The data are degenerate for the requested operation
    /// (empty cluster, zero-variance asset, non-finite entries, ...).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// A spectral-gap or model assumption required by the operation fails.
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    /// A text input (CSV, JSON, edge list) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// An experiment or CLI configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
