use std::path::PathBuf;

use thiserror::Error;

use crate::train_test::TrainRecord;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },

    #[error("dimension mismatch: left has {left} columns, right has {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("{loss} does not accept the {distance} distance: {reason}")]
    IncompatibleDistance {
        loss: String,
        distance: String,
        reason: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid tuples: {0}")]
    InvalidTuples(String),

    #[error("label {label} out of range for {classes} class weight rows")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("weight row {row} has norm below {eps}")]
    DegenerateWeights { row: usize, eps: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("k = {k} exceeds the {available} available reference points")]
    KTooLarge { k: usize, available: usize },

    #[error("query {query} has {have} neighbors but needs {need}")]
    InsufficientNeighbors {
        query: usize,
        have: usize,
        need: usize,
    },

    #[error("labelings differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("unknown metric `{0}`")]
    UnknownMetric(String),

    #[error("metric `{0}` is already registered")]
    DuplicateName(String),

    #[error("loss diverged at epoch {epoch}, iteration {iteration}")]
    DivergenceDetected {
        epoch: usize,
        iteration: usize,
        record: Box<TrainRecord>,
    },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
