use thiserror::Error;

/// Errors produced by image containers and operations.
#[derive(Debug, Error)]
pub enum ImgError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed image file: {0}")]
    Format(String),
}
