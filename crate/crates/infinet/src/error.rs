//! Error type for the IO and CLI layer, with the exit-code mapping the
//! command-line contract promises: 1 for failed checks and failed runs,
//! 2 for usage problems such as missing files or bad flag values.

use std::fmt;

#[derive(Debug)]
pub enum AppError {
    /// Wraps a numeric/shape error from the core library.
    Core(infinet_core::error::Error),
    /// Filesystem problem, annotated with the path involved.
    Io { path: String, source: std::io::Error },
    /// A file exists but its contents do not parse as the expected format.
    Format(String),
    /// Command-line arguments that pass flag parsing but violate a
    /// documented precondition.
    Usage(String),
}

pub type Result<T> = std::result::Result<T, AppError>;

impl AppError {
    /// Exit code for the process when this error ends a command: usage and
    /// missing-file problems exit 2, everything else (failed checks,
    /// aborted runs, corrupt data) exits 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Io { .. } | AppError::Usage(_) => 2,
            AppError::Core(_) | AppError::Format(_) => 1,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Core(e) => write!(f, "{e}"),
            AppError::Io { path, source } => write!(f, "{path}: {source}"),
            AppError::Format(msg) => write!(f, "format error: {msg}"),
            AppError::Usage(msg) => write!(f, "usage error: {msg}"),
        }
    }
}

impl std::error::Error for AppError {}

impl From<infinet_core::error::Error> for AppError {
    fn from(e: infinet_core::error::Error) -> Self {
        AppError::Core(e)
    }
}
