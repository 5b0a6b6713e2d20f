use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource limit: {what} ({requested} > {limit})")]
    ResourceLimit {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("spectral multiplier is not finite on mode {mode} (lambda = {lambda:e})")]
    SingularMultiplier { mode: usize, lambda: f64 },

    #[error("operator has a zero mode (periodic boundary); a strictly positive spectrum is required")]
    ZeroMode,

    #[error("unsupported parameter: {0}")]
    Unsupported(String),

    #[error("certification failed at {location}: {reason}")]
    CertificationFailure { location: String, reason: String },

    #[error("routes disagree: relative difference {relative_difference:e} exceeds {tolerance:e}")]
    ConsistencyFailure {
        relative_difference: f64,
        tolerance: f64,
    },

    #[error("seminorm equivalence failed for `{function}`: {reason}")]
    EquivalenceFailure { function: String, reason: String },

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
