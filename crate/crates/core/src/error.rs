use std::path::PathBuf;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record at line {line}: {message}")]
    MalformedRecord { line: u64, message: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("fewer than 2 classes (found {found})")]
    TooFewClasses { found: usize },

    #[error("class {class} has {count} samples, at least 2 are required to split")]
    ClassTooSmall { class: String, count: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid weight distribution: {0}")]
    InvalidWeights(String),

    #[error("class {class} has zero total weight")]
    ZeroClassWeight { class: usize },

    #[error("non-finite training loss at epoch {epoch}: {loss}")]
    NonFiniteLoss { epoch: usize, loss: f64 },

    #[error("augmenter failed for sample {sample_id}: {message}")]
    Augmenter { sample_id: u64, message: String },

    #[error("learner fit failed in round {round}: {source}")]
    RoundFit {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no accepted rounds: {0}")]
    NoAcceptedRounds(String),

    #[error("label map mismatch: {0}")]
    LabelMapMismatch(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("no label name found in completion {0:?}")]
    NoLabelFound(String),

    #[error("ambiguous completion {completion:?}: mentions both {first:?} and {second:?}")]
    AmbiguousLabel {
        completion: String,
        first: String,
        second: String,
    },

    #[error("remote endpoint error: {0}")]
    Remote(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error("incompatible model file: {0}")]
    IncompatibleModel(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
