use std::io;
use std::path::Path;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("empty result: {0}")]
    Empty(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Sampler bookkeeping no longer matches the assignments.
    #[error("sampler state corrupted: {0}")]
    Corruption(String),
}

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        Error::Io {
            context: path.display().to_string(),
            source,
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) => 2,
            Error::Io { .. } | Error::Format(_) => 3,
            Error::Empty(_) => 4,
            Error::Numerical(_) | Error::Corruption(_) => 5,
        }
    }
}
