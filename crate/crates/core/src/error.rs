use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A row or record of an input file could not be decoded.
    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },

    /// Structural problem with an input file (wrong columns, bad header, ...).
    #[error("format error in {origin}: {message}")]
    Format { origin: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    Param(String),

    /// Mathematical precondition violated (zero vector, zero words, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("missing ids: {}", .0.join(", "))]
    MissingIds(Vec<String>),

    #[error("provider failure ({}retriable) for ids [{}]: {message}", if *.retriable { "" } else { "non-" }, .ids.join(", "))]
    Provider {
        retriable: bool,
        ids: Vec<String>,
        message: String,
    },

    #[error("label import rejected: {}", .problems.join("; "))]
    Labels { problems: Vec<String> },

    #[error("{0}")]
    Data(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(origin: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            origin: origin.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn format(origin: &str, message: impl Into<String>) -> Self {
        Error::Format {
            origin: origin.to_string(),
            message: message.into(),
        }
    }
}
