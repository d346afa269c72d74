use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FiissError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A query point lies beyond the simulated range of a path or sequence.
    #[error("range error: {0}")]
    Range(String),
    /// A configured size cap would be exceeded.
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    #[error("empty sample")]
    EmptySample,
    /// The tail of a sample is too thin for the requested fit window.
    #[error("window error: {0}")]
    Window(String),
}

pub type Result<T> = std::result::Result<T, FiissError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(FiissError::Domain(msg.into()))
}

pub(crate) fn range<T>(msg: impl Into<String>) -> Result<T> {
    Err(FiissError::Range(msg.into()))
}
