use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("line {line}: invalid UTF-8")]
    InvalidUtf8 { line: usize },

    #[error("degenerate labels: both classes must be present")]
    DegenerateLabels,

    #[error("non-finite feature value in row {row}")]
    NonFinite { row: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty vocabulary after min_df filtering (min_df = {min_df})")]
    EmptyVocabulary { min_df: usize },

    #[error("dataset is not labeled")]
    Unlabeled,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid feature spec `{0}`")]
    FeatureSpec(String),

    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },

    #[error("unsupported model file version {found} (expected {expected})")]
    ModelVersion { found: String, expected: u32 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }
}
