use thiserror::Error;

/// Errors surfaced by model construction, topology lookups, solving and simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid split boundary: {0}")]
    InvalidBoundary(String),

    #[error("segment count {requested} out of range for a {layers}-layer model")]
    InvalidSegmentCount { requested: usize, layers: usize },

    #[error("unknown node: {0}")]
    UnknownNode(String),

    #[error("no link between {a} and {b}")]
    NoLink { a: String, b: String },

    #[error("time {0}s is outside the simulated horizon")]
    TimeOutOfRange(f64),

    #[error("no feasible placement: {detail}")]
    NoFeasiblePlacement { detail: String },

    #[error("greedy assignment dead-ended at segment {segment}")]
    GreedyDeadEnd { segment: usize },

    #[error("config error at `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
