use std::path::PathBuf;

/// Errors surfaced by the flora library.
#[derive(Debug, thiserror::Error)]
pub enum FloraError {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite value in {what} at step {step}")]
    NonFinite { what: String, step: u64 },

    #[error("format error in {path}: {detail} (byte offset {offset})")]
    Format {
        path: PathBuf,
        detail: String,
        offset: u64,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, FloraError>;

impl FloraError {
    pub fn dim(expected: usize, got: usize, context: impl Into<String>) -> Self {
        FloraError::DimMismatch {
            expected,
            got,
            context: context.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FloraError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, detail: impl Into<String>, offset: u64) -> Self {
        FloraError::Format {
            path: path.into(),
            detail: detail.into(),
            offset,
        }
    }
}
