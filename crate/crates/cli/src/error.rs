use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: row {row}, column {col}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        col: usize,
        message: String,
    },

    #[error("{path}: label column '{selector}' not found")]
    MissingLabelColumn { path: PathBuf, selector: String },

    #[error("{path}: {message}")]
    Dataset { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Core(#[from] spsnmf::Error),

    #[error("all {0} trials failed")]
    AllTrialsFailed(usize),
}

impl CliError {
    /// Process exit code: 2 bad arguments, 3 dataset errors, 4 when every
    /// trial failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. }
            | CliError::MissingLabelColumn { .. }
            | CliError::Dataset { .. } => 3,
            CliError::Core(_) => 2,
            CliError::AllTrialsFailed(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
