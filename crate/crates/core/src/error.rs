use thiserror::Error;

/// Errors raised by the estimators and their inputs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum VoiError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dataset kind mismatch: expected {expected}, got {found}")]
    KindMismatch { expected: &'static str, found: &'static str },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch { what: &'static str, left: usize, right: usize },

    #[error("Metropolis sampler failed: acceptance rate {acceptance:.3} outside (0.05, 0.95)")]
    SamplerFailure { acceptance: f64 },

    #[error("regression failed: {0}")]
    Regression(String),

    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),
}

impl VoiError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        VoiError::InvalidArgument { name, reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, VoiError>;
