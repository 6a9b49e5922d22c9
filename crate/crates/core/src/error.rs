use thiserror::Error;

/// Errors produced by the bound and estimator routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar input was NaN or infinite.
    #[error("domain error: {0} is not finite")]
    NonFinite(&'static str),

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    /// An information matrix could not be inverted.
    #[error("{what} is singular or not positive definite ({cause})")]
    Singular { what: &'static str, cause: String },

    #[error("zero or negative diagonal entry {index} in {what}")]
    ZeroDiagonal { what: &'static str, index: usize },

    /// Every prior draw produced a singular information matrix.
    #[error("prior expectation failed: {rejected} of {draws} draws singular")]
    DegenerateExpectation { rejected: usize, draws: usize },

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the numerics rather than by the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::DegenerateExpectation { .. }
                | Error::ZeroDiagonal { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
