use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("cell {cell}: local moment system is singular ({space} space)")]
    SingularCell { cell: usize, space: &'static str },

    #[error("factorization of {what} failed: zero or non-finite pivot at row {row}")]
    Singular { what: String, row: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("operator of size {size} exceeds the dense limit {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
