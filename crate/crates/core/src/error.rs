use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid record at index {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },

    #[error("degenerate matrix: {0}")]
    DegenerateMatrix(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("MADD undefined for n<3 (n = {0})")]
    MaddTooSmall(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("item {0} is not in the cluster's item set")]
    ItemNotInCluster(usize),

    #[error("no value defined for item {0}")]
    MissingValue(usize),

    #[error("no users with a non-empty test basket to evaluate")]
    NoUsersEvaluated,

    #[error("{path}: row {row}, column {column}: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error("run {run}, distance {distance}, stage {stage}: {source}")]
    Stage {
        run: usize,
        distance: String,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this error: 1 for usage/config, 2 for data, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 1,
            Error::InvalidRecord { .. }
            | Error::DegenerateMatrix(_)
            | Error::EmptyInput(_)
            | Error::Csv { .. }
            | Error::Format(_)
            | Error::MaddTooSmall(_)
            | Error::NoUsersEvaluated
            | Error::Io(_) => 2,
            Error::Stage { source, .. } => source.exit_code(),
            Error::DimensionMismatch { .. } | Error::ItemNotInCluster(_) | Error::MissingValue(_) => 3,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, row: usize, column: &str, message: impl ToString) -> Self {
        Error::Csv {
            path: path.into(),
            row,
            column: column.to_string(),
            message: message.to_string(),
        }
    }
}
