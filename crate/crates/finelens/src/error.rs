use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid case {case_id}: {message}")]
    InvalidCase { case_id: String, message: String },
    #[error("duplicate case_id {0}")]
    DuplicateCaseId(String),
    #[error("merge conflict on decision_ref {decision_ref}: {message}")]
    MergeConflict {
        decision_ref: String,
        message: String,
    },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("column name collision: {0}")]
    ColumnCollision(String),
    #[error("out-of-vocabulary lemma {0:?}")]
    OutOfVocabulary(String),
    #[error("hyperparameter out of range: {0}")]
    HyperOutOfRange(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("no remaining covariance")]
    NoRemainingCovariance,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;
