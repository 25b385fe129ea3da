use thiserror::Error;

/// Errors raised by the core algorithms.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The defining map is not a submersion at the base point, or the base
    /// point is too far from the zero set.
    #[error("degenerate germ: {0}")]
    DegenerateGerm(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A globalization schedule violates one of its two admissibility bounds.
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
