use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mode index {mode} out of range for {n_modes}-mode system")]
    ModeOutOfRange { mode: usize, n_modes: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not a valid quantum state: {0}")]
    InvalidState(String),

    #[error("numerical quality gate failed: {check} = {value:.3e} exceeds {limit:.3e}")]
    QualityGate {
        check: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("solver did not converge: {0}")]
    NoConvergence(String),
}

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True when the error is a numerical-quality gate violation
    /// (trace-preservation defect, POVM completeness, truncation weight).
    pub fn is_quality_gate(&self) -> bool {
        matches!(self, Error::QualityGate { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
