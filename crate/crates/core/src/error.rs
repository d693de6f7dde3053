use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{what} index {index} out of range (< {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("invalid action {action}: environment has {n_actions} actions")]
    InvalidAction { action: usize, n_actions: usize },

    #[error("episode already finished; reset before stepping")]
    EpisodeFinished,

    #[error("unknown environment `{0}`")]
    UnknownEnv(String),

    #[error("unknown agent `{0}`")]
    UnknownAgent(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in {what} at ({row}, {col})")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },

    #[error("solver diverged: cost is not finite at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("records have unequal episode counts ({expected} vs {found})")]
    Ragged { expected: usize, found: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("plot rendering failed: {0}")]
    Plot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
