use thiserror::Error;

use crate::grid::Cell;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid workspace: {0}")]
    InvalidWorkspace(String),
    #[error("cell {0} is not a tile")]
    NotATile(Cell),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("{0}")]
    Priority(String),
    #[error("not a grid graph: {0}")]
    NotGridGraph(String),
    #[error("state space bound of {0} states exceeded")]
    StateSpaceExceeded(usize),
}
