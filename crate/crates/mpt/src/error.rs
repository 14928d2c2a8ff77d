//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Incompatible matrix/layout shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A caller-supplied value is out of its legal range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A binary file failed validation; `field` names the offending header
    /// field or payload section.
    #[error("format error in `{field}`: {message}")]
    Format { field: String, message: String },

    /// Refusing to overwrite an existing output file.
    #[error("path collision: {} already exists", .0.display())]
    PathCollision(PathBuf),

    /// NaN or infinity where a finite value is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A training-time invariant was violated (aborts the run).
    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable one-word category used by the CLI when reporting failures.
    pub fn category(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "shape",
            Error::InvalidArgument(_) => "argument",
            Error::Format { .. } => "format",
            Error::PathCollision(_) => "collision",
            Error::NonFinite(_) => "numeric",
            Error::Diverged(_) => "diverged",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn format(field: &str, message: impl Into<String>) -> Self {
        Error::Format {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
