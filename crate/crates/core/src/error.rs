use std::path::PathBuf;

use thiserror::Error;

use crate::temporal::EventId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("temporal network is inconsistent")]
    InconsistentNetwork,

    #[error("event {0} is not declared in the network")]
    UnknownEvent(EventId),

    #[error("schedule has no time for event {0}")]
    MissingEvent(EventId),

    #[error("malformed network: {0}")]
    Malformed(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("deadline exceeded before a verdict was reached")]
    Timeout,

    #[error("{size} events to enumerate exceeds the exhaustive cap of {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("unsupported temporal network: {0}")]
    UnsupportedAtn(String),

    #[error("MIP solver executable not found: {0}")]
    SolverNotFound(String),

    #[error("MIP solver exceeded its deadline")]
    SolverTimeout,

    #[error("MIP solver failed ({status}): {stderr}")]
    SolverFailed { status: String, stderr: String },

    #[error("cannot parse solver output: {0}")]
    SolutionParse(String),

    #[error("rounded order binaries are inconsistent for pair ({0}, {1})")]
    InconsistentBinaries(String, String),

    #[error("MIP solution does not certify consistency: {0}")]
    UncertifiedSolution(String),

    #[error("instance generation failed: {0}")]
    GenerationFailure(String),

    #[error("invalid document: {0}")]
    Document(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
