//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by graph construction, model evaluation, inference,
/// sampling, and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {node} out of range (node count {node_count})")]
    NodeOutOfRange { node: usize, node_count: usize },

    #[error("community index {community} out of range (community count {community_count})")]
    CommunityOutOfRange {
        community: usize,
        community_count: usize,
    },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid membership move: {0}")]
    InvalidMove(String),

    #[error("no legal move exists for any operation kind")]
    ProposalExhausted,

    #[error("empty search grid")]
    EmptyGrid,

    #[error("permutation enumeration capped at {max} communities, got {count}")]
    EnumerationTooLarge { count: usize, max: usize },

    #[error("rejection sampling budget of {budget} attempts exhausted after {achieved} of {requested} pairs")]
    RejectionBudgetExhausted {
        budget: u64,
        achieved: usize,
        requested: usize,
    },

    #[error("no node with at least {k} community memberships to seed a subnetwork")]
    NoQualifyingSeed { k: usize },

    #[error("no isolated community satisfies the size threshold")]
    NoIsolatedCommunities,

    #[error("cover must contain at least one community")]
    EmptyCover,

    #[error("omega index undefined: expected agreement is 1 but observed agreement is not")]
    DegenerateOmega,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps an I/O error with the path it occurred on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
