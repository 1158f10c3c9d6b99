use thiserror::Error;

use crate::model::{ClusterId, NodeId};

pub type Result<T, E = BrpError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BrpError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("cluster {cluster} holds {occupancy} nodes, capacity is {capacity}")]
    CapacityExceeded {
        cluster: ClusterId,
        occupancy: usize,
        capacity: usize,
    },

    #[error("node {0} assigned more than once")]
    DuplicateNode(NodeId),

    #[error("node {0} has no cluster")]
    MissingNode(NodeId),

    #[error("cluster {cluster} out of range (cluster count {count})")]
    UnknownCluster { cluster: ClusterId, count: usize },

    #[error("node {node} out of range (n = {n})")]
    UnknownNode { node: NodeId, n: usize },

    #[error("request pairs node {0} with itself")]
    SelfPair(NodeId),

    #[error("configurations differ in shape: {0}")]
    ShapeMismatch(String),

    #[error("CREP needs augmentation delta >= 4, got {0}")]
    InsufficientAugmentation(u32),

    #[error("no cluster can host a component of {size} nodes (needs {needed} spare)")]
    NoEligibleCluster { size: usize, needed: usize },

    #[error("geometry error: {0}")]
    GeometryError(String),

    #[error("{what}: {count} exceeds the cap of {cap}")]
    TooLarge {
        what: &'static str,
        count: u128,
        cap: u128,
    },

    #[error("malformed phase profile: {0}")]
    MalformedProfile(String),

    #[error("adversary stuck: {0}")]
    AdversaryStuck(String),

    #[error("malformed paging sequence: {0}")]
    MalformedPagingSequence(String),

    #[error("bad probability: {0}")]
    BadProbability(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: node {node} out of range (n = {n})")]
    NodeOutOfRange { line: usize, node: NodeId, n: usize },

    #[error("invariant violated at step {step}: {message}")]
    Invariant {
        step: u64,
        message: String,
        dump: String,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for BrpError {
    fn from(err: std::io::Error) -> Self {
        BrpError::Io(err.to_string())
    }
}
