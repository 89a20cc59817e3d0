use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Graph or dataset content violates a structural invariant.
    #[error("validation failed at {location}: {message}")]
    Validation { location: String, message: String },

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("edge set is empty")]
    EmptyEdgeSet,

    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn validation(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            location: location.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Stable category used by the CLI exit-code taxonomy.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config { .. } => "config",
            Error::Validation { .. } | Error::Parse { .. } | Error::Io { .. } => "data",
            Error::Infeasible(_) | Error::EmptyEdgeSet => "data",
            Error::NonFinite(_) => "numeric",
            Error::Shape { .. } | Error::Contract(_) => "internal",
        }
    }
}
