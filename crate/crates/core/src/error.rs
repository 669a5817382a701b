use thiserror::Error;

/// Errors raised across the library.
///
/// The CLI maps `Budget` to exit code 2 and everything else to exit code 1.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A configured resource cap (depth, precision, elimination size, search) was hit.
    #[error("budget exhausted: {what} exceeds limit {limit}")]
    Budget { what: String, limit: u64 },

    /// A mathematical hypothesis of a construction does not hold for the input.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// The caller passed arguments outside the operation's domain.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A stored certificate does not match its recomputation.
    #[error("certificate rejected: {0}")]
    Verification(String),

    /// Malformed input data.
    #[error("malformed input in field `{field}`: {message}")]
    Parse { field: String, message: String },
}

impl Error {
    pub fn budget(what: impl Into<String>, limit: u64) -> Self {
        Error::Budget {
            what: what.into(),
            limit,
        }
    }

    pub fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
