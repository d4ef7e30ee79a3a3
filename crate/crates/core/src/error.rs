//! Error type shared across the library.

use std::path::PathBuf;

/// Errors surfaced by indexing, retrieval, prompt assembly and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path} is not valid UTF-8")]
    Encoding { path: PathBuf },

    #[error("parser initialization failed: {0}")]
    Parser(String),

    #[error("cursor {line}:{column} is outside the file (lines: {line_count})")]
    CursorOutOfRange {
        line: u32,
        column: u32,
        line_count: u32,
    },

    #[error("graph file {path}: {reason}")]
    GraphFormat { path: PathBuf, reason: String },

    #[error(
        "graph file {path} has format version {found}, this build reads version {supported}"
    )]
    GraphVersion {
        path: PathBuf,
        found: u32,
        supported: u32,
    },

    #[error("{path}: malformed record on line {line}: {reason}")]
    Dataset {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("unknown tokenizer {name:?}; available: {available}")]
    UnknownTokenizer { name: String, available: String },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
