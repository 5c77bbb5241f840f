use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("interaction matrix is empty")]
    EmptyMatrix,
    #[error("interaction matrix is not square: row {row} has {len} entries, expected {expected}")]
    NonSquare { row: usize, len: usize, expected: usize },
    #[error("entry ({row}, {col}) is not a finite number")]
    NonFinite { row: usize, col: usize },
    #[error("entry ({row}, {col}) is negative")]
    NegativeEntry { row: usize, col: usize },
    #[error("row {row} sums to {sum}, which exceeds 1")]
    RowSumExceedsOne { row: usize, sum: f64 },
    #[error("matrix text: {0}")]
    MatrixFormat(String),

    #[error("drift matrix has a positive entry at ({row}, {col})")]
    PositiveEntry { row: usize, col: usize },
    #[error("numeric invertibility ({numeric}) disagrees with structural verdict ({structural})")]
    InconsistentClassification { numeric: bool, structural: bool },
    #[error("drift matrix is singular")]
    SingularK,
    #[error("drift block of class {class} (level {level}) is singular")]
    SingularBlock { level: usize, class: usize },
    #[error("no level-0 value supplied for class {0}")]
    MissingLevelZeroValue(usize),
    #[error("value vector for class {class} has length {got}, expected {expected}")]
    ValueLength { class: usize, got: usize, expected: usize },

    #[error("agent {0} is out of range")]
    AgentOutOfRange(usize),
    #[error("class {class} mixes competitive and cooperative agents")]
    MixedAttitudes { class: usize },
    #[error("forcing on agent {0}, whose row is stochastic (alpha_i = 1)")]
    ForcingOnStochasticRow(usize),
    #[error("agent {0} is both stubborn and forced")]
    StubbornAndForced(usize),
    #[error("{what} for agent {agent} is {value}, outside [0, 1]")]
    OutOfUnitInterval { what: &'static str, agent: usize, value: f64 },
    #[error("initial state has {got} entries, expected {expected}")]
    InitialLength { got: usize, expected: usize },
    #[error("invalid step schedule: {0}")]
    InvalidSchedule(String),
    #[error("probability for agent {agent} is {value}, outside [0, 1]")]
    ProbabilityOutOfRange { agent: usize, value: f64 },

    #[error("need at least {needed} runs, got {got}")]
    TooFewRuns { needed: usize, got: usize },
    #[error("non-degeneracy test does not apply to class {class} ({kind})")]
    NotApplicable { class: usize, kind: String },
    #[error("shape mismatch: {0}")]
    MismatchedShapes(String),

    #[error(transparent)]
    Config(#[from] crate::config::ConfigErrors),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
