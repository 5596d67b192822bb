use thiserror::Error;

/// Errors raised by the model layer (states, channels, strategies, estimators).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mode index {index} out of range for a {n_modes}-mode state")]
    ModeOutOfRange { index: usize, n_modes: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("tap outcome does not match the {detector} detector of the feedforward plan")]
    OutcomeMismatch { detector: &'static str },

    #[error("no trajectories accepted out of {n} (success probability {success_prob})")]
    NoYield { n: u64, success_prob: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
