use thiserror::Error;

use crate::{ActionId, StateId};

#[derive(Debug, Error)]
pub enum Error {
    #[error("state {0} is not in the transition system")]
    UnknownState(StateId),
    #[error("state {0} already exists")]
    DuplicateState(StateId),
    #[error("action {0} is out of range ({1} actions)")]
    UnknownAction(ActionId, usize),
    #[error("proposition `{0}` is not defined")]
    UnknownProposition(String),
    #[error("state number {number} does not fit in {width} bits")]
    EncodingRange { number: u64, width: usize },
    #[error("bit vector has width {got}, expected {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("all {0}-bit root codes of the split encoding are in use")]
    EncodingExhausted(usize),
    #[error("the out-of-domain sink cannot be split")]
    SinkSplit,
    #[error("the winning set is empty")]
    EmptyWinningSet,
    #[error("initial state {0:?} does not lie in a winning cell")]
    NotWinning(Vec<f64>),
    #[error("set is not expressed over the successor-state variables")]
    SupportMismatch,
    #[error("fixed-point trace check failed: {0}")]
    Trace(String),
    #[error("controller has no entry for state {state} in phase {phase}")]
    NoControl { state: StateId, phase: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid budget: {0}")]
    Budget(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Bdd(#[from] splitsynth_bdd::BddError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
