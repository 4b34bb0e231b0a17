use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown article title `{0}`")]
    UnknownTitle(String),
    #[error("duplicate article title `{0}`")]
    DuplicateTitle(String),
    #[error("self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("a graph needs at least one node")]
    EmptyGraph,
    #[error("density is undefined for n = {0}; need at least two nodes")]
    DensityDomain(usize),

    #[error("missing dataset file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{file}:{line}: dangling id {id}")]
    DanglingId { file: String, line: usize, id: usize },
    #[error("path {path_id}: step {from} -> {to} is not an edge of the graph")]
    MissingEdge { path_id: usize, from: usize, to: usize },
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error("inconsistent dataset: {0}")]
    Inconsistent(String),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("no trajectories to split")]
    EmptyTrajectories,

    #[error("article `{0}` is not in the corpus")]
    ArticleNotFound(String),
    #[error("corpus exhausted: {0}")]
    CorpusExhausted(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("transport error: {0}")]
    Transport(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite value during {stage}")]
    NonFinite { stage: &'static str },
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("checkpoint schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("pseudoinverse projection is limited to m <= {limit} edges (got {m})")]
    TooLargeForPseudoinverse { m: usize, limit: usize },
    #[error("oracle size cap exceeded: {0}")]
    OracleTooLarge(String),
    #[error("no test queries to evaluate")]
    EmptyEvaluation,

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
