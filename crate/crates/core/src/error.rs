use std::path::PathBuf;

use thiserror::Error;

use crate::market::{Market, ValidationReport};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("invalid market: {0}")]
    InvalidMarket(ValidationReport),

    #[error("input too large for {operation}: {detail}")]
    InputTooLarge {
        operation: &'static str,
        detail: String,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A per-market implication that the theory guarantees was violated.
    /// Only an implementation bug can produce this.
    #[error("implication violated in cell {cell}, draw {draw} (seed {seed:#018x}): {detail}")]
    ImplicationViolation {
        cell: usize,
        draw: usize,
        seed: u64,
        detail: String,
        market: Box<Market>,
    },

    #[error("cannot resume {path}: {reason}")]
    Resume { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
