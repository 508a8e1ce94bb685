use thiserror::Error;

/// Errors raised by the model, control and harness layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("singular Jacobian (|det| = {det:.3e}) with zero damping")]
    SingularMatrix { det: f64 },

    #[error("task normal has no moment arm: sin(theta1) = {sin_theta:.3e} below {sin_eps:.1e}")]
    NearSingularStiffness { sin_theta: f64, sin_eps: f64 },

    #[error("stiffness must be positive, got {0}")]
    InvalidStiffness(f64),

    #[error("admittance update unstable: dt*B/M = {ratio:.4} (must be < 2)")]
    UnstableTimestep { ratio: f64 },

    #[error("no samples in window starting at t = {from_t}")]
    EmptyWindow { from_t: f64 },

    #[error("second-order fit failed: {0}")]
    FitFailed(String),

    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;

pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> SimError {
    SimError::InvalidParameter {
        key: key.to_string(),
        reason: reason.into(),
    }
}
