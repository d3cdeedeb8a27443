//! Error type shared by the library.

use thiserror::Error;

/// Failure modes surfaced to callers.
///
/// Everything here is a *caller* error or a detected numerical breakdown;
/// internal consistency violations panic instead.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation. Carries the offending name and reason.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },

    /// A modelling assumption does not hold for the requested inputs.
    #[error("assumption violated: {0}")]
    Assumption(String),

    /// Two objects built on different grids were combined.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A non-finite value appeared during integration.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// The master-equation trace wandered beyond tolerance.
    #[error("trace drift {drift:.3e} at t={time:.6} exceeds {tol:.1e}")]
    TraceDrift { time: f64, drift: f64, tol: f64 },

    /// Malformed or truncated binary state data.
    #[error("bad state dump: {0}")]
    BadDump(String),

    /// Underlying I/O failure while reading or writing state data.
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Convenience constructor for `InvalidParam`.
    pub fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
