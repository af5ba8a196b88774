use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    /// Malformed text input (pool files, pair files, word2vec text, config).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Malformed or inconsistent binary artifact (index, model checkpoint).
    #[error("invalid format: {0}")]
    Format(String),

    /// An operation precondition was violated.
    #[error("{0}")]
    InvalidInput(String),

    /// Two artifacts built from different sources were combined.
    #[error("fingerprint mismatch: {0}")]
    FingerprintMismatch(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
