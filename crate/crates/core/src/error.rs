use thiserror::Error;

/// Errors raised by the entropy, estimation and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GseError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A distribution failed validation.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    /// An infinite series cannot be evaluated to the requested tolerance.
    #[error("series does not converge: {0}")]
    NonConvergence(String),
    /// Malformed input data (counts files, distribution specs).
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, GseError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(GseError::Domain(msg.into()))
}
