//! Error taxonomy shared by every module in the crate.

/// Crate-wide error type.
///
/// Numeric code in this crate never returns NaN or infinity silently; any
/// computation that would produce one reports `Domain` or `Numeric` instead.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input lies outside the mathematical domain of the operation
    /// (for example an entropy gradient at a zero coordinate).
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector dimensions disagree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Structurally invalid argument (bad exponent, empty cost list,
    /// unsupported regularizer/body pairing, malformed config).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative routine failed to reach its tolerance. The message
    /// carries the achieved residual.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Filesystem failure while reading or writing artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON encode/decode failure.
    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
