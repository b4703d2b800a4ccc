use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("beam set is empty")]
    EmptyBeamSet,

    #[error("unsupported m_F = {0}; only the {{-1, 0}} qubit subspace is modelled")]
    UnsupportedSpin(i32),

    #[error("size mismatch: expected {expected} samples, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("eigensolver did not converge: worst residual {worst:.3e} Hz exceeds {tol:.3e} Hz")]
    NonConvergence { worst: f64, tol: f64, residuals: Vec<f64> },

    #[error("wells not resolved: best localization {0:.3} < 0.5")]
    DegenerateGeometry(f64),

    #[error("time step {dt} us exceeds the stability limit {limit:.4} us")]
    TimeStepTooLarge { dt: f64, limit: f64 },

    #[error("state is not normalized: norm^2 = {0}")]
    NotNormalized(f64),

    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
