//! Error type shared by every layer of the crate.

use thiserror::Error;

/// Errors produced by configuration validation and the numerical pipeline.
#[derive(Debug, Clone, Error)]
pub enum IsacError {
    /// A configuration or query field is out of its admissible range.
    #[error("invalid configuration: {field}: {message}")]
    InvalidConfig {
        /// Name of the offending field, exactly as it appears in config files.
        field: &'static str,
        message: String,
    },

    /// The beamforming direction `b1*h + b2*a` has a norm too small to normalize.
    #[error("degenerate beamformer: direction norm {norm:.3e} below 1e-12")]
    DegenerateBeamformer { norm: f64 },

    /// The Fisher information underlying the CRB collapsed (e.g. theta at broadside null).
    #[error("singular Fisher information: CRB denominator {denominator:.3e} below 1e-300")]
    SingularFisher { denominator: f64 },

    /// A covariance matrix had an eigenvalue below the negative tolerance.
    #[error("covariance is not positive semidefinite: eigenvalue {eigenvalue:.3e}")]
    NonPsdCovariance { eigenvalue: f64 },

    /// The characteristic-function inversion could not certify the requested accuracy.
    #[error("CDF accuracy target not reached: error estimate {error:.3e} exceeds 1e-6")]
    AccuracyNotReached { error: f64 },

    /// Doubling the angular quadrature nodes moved the result more than the tolerance.
    #[error("theta quadrature did not converge: doubling changed result by {delta:.3e}")]
    QuadratureNotConverged { delta: f64 },
}

impl IsacError {
    pub(crate) fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        IsacError::InvalidConfig {
            field,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, IsacError>;
