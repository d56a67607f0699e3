use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient corpus: {0}")]
    InsufficientCorpus(String),

    #[error("insufficient source documents for class `{class}`: need {needed}, have {available}")]
    InsufficientSource {
        class: String,
        needed: usize,
        available: usize,
    },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty sequence")]
    EmptySequence,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("degenerate cluster: all statistics equal")]
    DegenerateCluster,

    #[error("duplicate dictionary entry ({word}, {class})")]
    DuplicateEntry { word: String, class: String },

    #[error("overlapping lexicons: `{0}` planted in more than one class")]
    OverlappingLexicon(String),

    #[error("wrong variant: expected {expected}, got {actual}")]
    WrongVariant { expected: String, actual: String },

    #[error("vocabulary hash mismatch: checkpoint {expected}, supplied {actual}")]
    VocabularyMismatch { expected: String, actual: String },

    #[error("unsupported checkpoint version {0}")]
    CheckpointVersion(u32),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("image encoding failed: {0}")]
    Image(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
