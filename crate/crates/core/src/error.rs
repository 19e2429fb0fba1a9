//! Error types shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or mismatched tensor/matrix shapes.
    #[error("shape error: {0}")]
    Shape(String),

    /// Invalid argument value (cutoffs, counts, ranges, NaN inputs).
    #[error("parameter error: {0}")]
    Param(String),

    /// Malformed tensor file (bad magic, truncation, unknown dtype).
    #[error("format error: {0}")]
    Format(String),

    /// A linear-attention denominator fell below the safe threshold.
    #[error("degenerate similarity at row {row}: denominator {denominator:e} <= {threshold:e}")]
    DegenerateSimilarity {
        row: usize,
        denominator: f64,
        threshold: f64,
    },

    /// A randomized search finished without finding a witness.
    #[error("search exhausted after {trials} trials")]
    SearchExhausted { trials: usize },

    /// A computation produced NaN/Inf.
    #[error("numerical failure at {context}")]
    NumericalFailure { context: String },

    /// API misuse (e.g. replaying a consumed tape).
    #[error("usage error: {0}")]
    Usage(String),

    /// Checkpoint/config mismatch.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
