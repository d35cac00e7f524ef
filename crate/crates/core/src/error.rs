use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type. Variants map to the failure classes of the
/// pipeline stages: file format problems, contract violations between
/// stages, and validation mismatches.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("truncated file {path} at byte offset {offset}: {reason}")]
    Truncated {
        path: PathBuf,
        offset: u64,
        reason: String,
    },

    #[error("invalid input: {0}")]
    Domain(String),

    #[error("parse error at record {record}: {reason}")]
    Parse { record: usize, reason: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("missing COO blocks: {0:?}")]
    IncompleteBlocks(Vec<(usize, usize)>),

    #[error("group planning failed: {0}")]
    Planning(String),

    #[error("corrupt data at vertex {vertex}: {reason}")]
    Corruption { vertex: u64, reason: String },

    #[error("dispatch protocol error ({code}): {message}")]
    Protocol { code: String, message: String },

    #[error("storage error: {0}")]
    Storage(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
