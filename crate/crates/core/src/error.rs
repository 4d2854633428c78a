use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest line {line}: {message}")]
    ManifestParse { line: usize, message: String },

    #[error("manifest constraint violated: {0}")]
    ManifestConstraint(String),

    #[error("bad magic {found:?}, expected \"EVEC\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported EVEC version {0}")]
    UnsupportedVersion(u32),

    #[error("truncated EVEC file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("EVEC file has {0} trailing bytes after the payload")]
    TrailingBytes(u64),

    #[error("non-finite value at row {row}, col {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("language {0:?} has no HC speakers inside the training mask")]
    MissingHc(String),

    #[error("no centroid for language {0:?}")]
    MissingCentroid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
