use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An index, count or size falls outside what the operation admits.
    #[error("range error: {0}")]
    Range(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A value lies outside the domain of a transform (e.g. `ln(1+x)` with `x <= -1`).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("{}: {msg}", location(.path, *.line))]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("trajectory diverged at step {step}")]
    Divergence { step: usize },

    #[error("training diverged at step {step}: loss is not finite")]
    TrainingDivergence { step: usize },

    #[error("{0}")]
    SelectionFailure(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

/// `path:line`, or just `path` for file-level problems (line 0).
fn location(path: &std::path::Path, line: usize) -> String {
    if line == 0 {
        path.display().to_string()
    } else {
        format!("{}:{line}", path.display())
    }
}
