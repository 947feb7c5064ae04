use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A size or register-count precondition was violated.
    #[error("size error: {0}")]
    Size(String),

    /// An argument failed validation (non-unitary matrix, empty dataset, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A qubit or parameter index was out of range or duplicated.
    #[error("index error: {0}")]
    Index(String),

    /// A text artifact (dataset, circuit, checkpoint, CSV) could not be parsed.
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    /// An iterative numerical routine failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn size(msg: impl Into<String>) -> Self {
        Error::Size(msg.into())
    }

    pub fn index(msg: impl Into<String>) -> Self {
        Error::Index(msg.into())
    }

    pub fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            msg: msg.into(),
        }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
