use thiserror::Error;

/// Unified error type whose variants map one-to-one onto CLI exit codes.
///
/// 2 = incomplete data (a verdict could not be decided),
/// 3 = usage error, 4 = data error, 5 = network or cache error.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("incomplete data: {0}")]
    Incomplete(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code for this error kind.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 3,
            Error::Data(_) => 4,
            Error::Network(_) => 5,
            Error::Incomplete(_) => 2,
            Error::Internal(_) => 4,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn network(msg: impl Into<String>) -> Self {
        Error::Network(msg.into())
    }

    pub fn incomplete(msg: impl Into<String>) -> Self {
        Error::Incomplete(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
