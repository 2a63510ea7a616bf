use std::io;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] twistvan_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("no record file for curve {label} at {}", path.display())]
    MissingRecords { label: String, path: PathBuf },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration problems, 3 for numerical-contract violations,
    /// 4 for IO.
    pub fn exit_code(&self) -> i32 {
        use twistvan_core::Error as E;
        match self {
            AppError::Core(E::Model(_) | E::Config(_) | E::Domain(_) | E::Capacity { .. }) => 2,
            AppError::Core(_) => 3,
            AppError::Parse { .. } => 2,
            AppError::Io { .. }
            | AppError::Format { .. }
            | AppError::MissingRecords { .. }
            | AppError::Csv(_)
            | AppError::Json(_) => 4,
        }
    }
}
