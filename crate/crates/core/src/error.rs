use std::path::PathBuf;

use crate::data::Label;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("duplicate instance id `{0}`")]
    DuplicateId(String),
    #[error("instance `{0}` has an empty claim or evidence")]
    EmptyText(String),
    #[error("no instances")]
    NoInstances,
    #[error("unknown instance id `{0}`")]
    UnknownInstance(String),
    #[error("instance `{0}` is already labelled")]
    AlreadyLabelled(String),
    #[error("not enough `{label}` instances: need {needed}, have {available}")]
    InsufficientClass {
        label: Label,
        needed: usize,
        available: usize,
    },
    #[error("training data is empty")]
    EmptyTrainingData,
    #[error("requested {k} instances but only {available} are available")]
    KTooLarge { k: usize, available: usize },
    #[error("unknown embedding kind `{0}`")]
    UnknownEmbedding(String),
    #[error("embedding dimension mismatch for {kind}: expected {expected}, got {actual}")]
    DimensionMismatch {
        kind: String,
        expected: usize,
        actual: usize,
    },
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("committee is empty")]
    EmptyCommittee,
    #[error("duplicate committee member `{0}`")]
    DuplicateMember(String),
    #[error("member `{0}` has size_units 0")]
    ZeroSize(String),
    #[error("labelled set is empty")]
    EmptyLabelled,
    #[error("labelled instance `{0}` has no disagreement score")]
    MissingScore(String),
    #[error("CAL needs a warm start: the labelled pool is empty")]
    WarmStartRequired,
    #[error("knn_k = {knn_k} exceeds the {labelled} labelled instances")]
    KnnTooLarge { knn_k: usize, labelled: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("corpus has {0} tokens; at least 2 are required")]
    TooFewTokens(usize),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("claim `{claim}` references unknown document `{doc}`")]
    UnknownDocument { claim: String, doc: String },
    #[error("sidecar transport error: {0}")]
    Transport(String),
    #[error("sidecar error {code}: {message}")]
    Backend { code: String, message: String },
    #[error("sidecar protocol violation: {0}")]
    Protocol(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
