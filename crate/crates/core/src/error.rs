use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no records")]
    NoRecords,

    #[error("duplicate id \"{0}\"")]
    DuplicateId(String),

    #[error("record \"{id}\" has empty text")]
    EmptyText { id: String },

    #[error("line {line}: unknown label \"{token}\"")]
    UnknownLabel { line: usize, token: String },

    #[error("record \"{id}\": {message}")]
    InvalidRecord { id: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("vocabulary is empty after thresholding")]
    EmptyVocabulary,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("training requires at least one example of each class")]
    SingleClass,

    #[error("training diverged: non-finite loss at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("teacher targets missing for {count} id(s), e.g. {}", .sample.join(", "))]
    MissingTargets { count: usize, sample: Vec<String> },

    #[error("teacher probability for \"{id}\" outside [0,1]: {value}")]
    ProbabilityOutOfRange { id: String, value: f64 },

    #[error("teacher logit for \"{id}\" disagrees with p_true: sigmoid({logit}) != {p_true}")]
    LogitMismatch { id: String, p_true: f64, logit: f64 },

    #[error("exact Shapley enumeration over {players} varying features exceeds the limit of {max}; use sampling instead")]
    TooManyFeatures { players: usize, max: usize },

    #[error("model kind \"{0}\" is not supported here")]
    UnsupportedModel(&'static str),

    #[error("translation failed: {0}")]
    Translation(String),

    #[error("translation returned empty text")]
    EmptyTranslation,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the error stems from bad input or arguments rather than a
    /// failure inside the library.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Diverged { .. })
    }
}
