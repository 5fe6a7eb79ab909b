use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("edge list contains no edges")]
    EmptyInput,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("edge swap mixing failure: {succeeded} of {requested} swaps after {attempted} attempts (shortfall {})", requested - succeeded)]
    MixingFailure {
        requested: u64,
        succeeded: u64,
        attempted: u64,
    },

    #[error("no component of size {kappa} reachable after {restarts} consecutive walk restarts")]
    NoComponent { kappa: usize, restarts: usize },

    #[error("sampling from the {graph} graph failed: {source}")]
    Sampling {
        graph: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("subgraph is disconnected; canonical ordering requires a connected subgraph")]
    Disconnected,

    #[error("kappa mismatch: expected {expected}, found {found}")]
    KappaMismatch { expected: usize, found: usize },

    #[error("training class {0} is empty")]
    EmptyClass(&'static str),

    #[error("non-finite training loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("{0}")]
    Undefined(String),

    #[error("malformed binary record: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
