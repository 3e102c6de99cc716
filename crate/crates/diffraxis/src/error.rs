use std::path::PathBuf;

use diffraxis_core::Error as CoreError;
use thiserror::Error;

use crate::pipeline::Stage;

pub type Result<T> = std::result::Result<T, AppError>;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Input(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: CoreError,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl AppError {
    /// 1 for malformed input, 2 for a failed analysis stage, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Parse { .. } | AppError::Input(_) => 1,
            AppError::Stage { .. } => 2,
            AppError::Io { .. } | AppError::Csv { .. } | AppError::Json(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }
}
