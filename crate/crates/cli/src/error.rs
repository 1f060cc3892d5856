use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] photofrag_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{failed} of {total} jobs failed")]
    Partial { failed: usize, total: usize },

    #[error("all {0} jobs failed with numerical errors")]
    Numerical(usize),
}

impl EngineError {
    pub fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EngineError::File {
            path: path.into(),
            source,
        }
    }

    /// 2 config, 3 numerical, 4 partial failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            EngineError::Config(_) | EngineError::File { .. } => 2,
            EngineError::Core(e) if e.is_numerical() => 3,
            EngineError::Core(
                photofrag_core::Error::Config(_)
                | photofrag_core::Error::Validation(_)
                | photofrag_core::Error::Parse { .. },
            ) => 2,
            EngineError::Numerical(_) => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, EngineError>;
