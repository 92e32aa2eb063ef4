use std::io;
use std::path::PathBuf;

/// Failures while reading or writing on-disk artifacts.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },
    #[error("truncated file: need {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{extra} trailing bytes after payload")]
    TrailingBytes { extra: usize },
    #[error("header dimensions overflow")]
    Overflow,
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Core(#[from] evimpact_core::Error),
}

pub type Result<T, E = FormatError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> FormatError {
    let path = path.into();
    move |source| FormatError::Io { path, source }
}
