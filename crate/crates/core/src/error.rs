//! Crate error type.

use thiserror::Error;

/// Errors surfaced by the library.
///
/// `MethodFailed` is special: the pipeline catches it, records the cell with a
/// failed status, and keeps running. Every other variant aborts the run.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two aligned collections disagree in length or id set.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A prediction or view references an id the counterpart does not contain.
    #[error("unknown instance id {0}")]
    UnknownId(u64),

    /// A mitigation strategy could not be fitted on this fold; the cell is
    /// reported as failed instead of aborting the run.
    #[error("method {method} failed: {reason}")]
    MethodFailed { method: String, reason: String },

    /// Configuration file is malformed or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// A required input file or directory is absent.
    #[error("missing input: {0}")]
    MissingInput(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// CSV parse or write failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Shorthand for the pipeline-recoverable failure variant.
    pub fn method_failed(method: &str, reason: impl Into<String>) -> Self {
        Error::MethodFailed {
            method: method.to_string(),
            reason: reason.into(),
        }
    }

    /// True when the pipeline should record the cell as failed and continue.
    pub fn is_method_failure(&self) -> bool {
        matches!(self, Error::MethodFailed { .. })
    }
}
