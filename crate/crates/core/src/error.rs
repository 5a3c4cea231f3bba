use thiserror::Error;

use crate::VertexId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("weight a_{index} is zero")]
    ZeroWeight { index: usize },

    #[error("invalid weight specification: {0}")]
    InvalidWeights(String),

    #[error("weight a_{index} lies beyond the explicit prefix and the tail does not define it")]
    TailUndefined { index: usize },

    #[error("malformed system: {0}")]
    MalformedSystem(String),

    #[error("truncation n_max = {n_max} is too shallow for bandwidth {bandwidth}")]
    TruncationTooShallow { n_max: usize, bandwidth: usize },

    #[error("no finite path joins the source and the sink")]
    DisconnectedSourceSink,

    #[error("malformed graph: {0}")]
    MalformedGraph(String),

    #[error("vertices {u} and {v} are not adjacent")]
    NotAdjacent { u: VertexId, v: VertexId },

    #[error("vertex {vertex} repeats in a path")]
    RepeatedVertex { vertex: VertexId },

    #[error("layer {depth} has no forward edges")]
    FrontierEmpty { depth: usize },

    #[error("layer {depth} reached truncation at vertex {vertex}")]
    TruncationReached { depth: usize, vertex: VertexId },

    #[error("relaxation of vertex {vertex} is stuck with excess {excess}")]
    RelaxationStuck { vertex: VertexId, excess: f64 },

    #[error("ray witness exhausted at depth {achieved} of {requested}")]
    WitnessExhausted { achieved: usize, requested: usize },

    #[error("operator entry ({row}, {col}) is off the graph support")]
    InconsistentOperator { row: usize, col: usize },

    #[error("unsupported tail: {0}")]
    UnsupportedTail(String),

    #[error("certificate failure: {0}")]
    CertificateFailure(String),

    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
