use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty point set")]
    EmptyPointSet,

    #[error("invalid coordinate ({lat}, {lon})")]
    InvalidCoordinate { lat: f64, lon: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "newton iteration did not converge after {iterations} iterations (residual {residual})"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("insufficient fleet: available capacity {available} < demand {demand}")]
    InsufficientFleet { available: u64, demand: u64 },

    #[error("unassignable client {client}: demand {demand} exceeds every available vehicle")]
    UnassignableClient { client: u32, demand: u32 },

    #[error("degenerate geometry: cannot bisect a node of {members} members")]
    DegenerateGeometry { members: usize },

    #[error("unknown vertex {0}")]
    UnknownVertex(u32),

    #[error("negative edge ({u}, {v}) with weight {weight}")]
    NegativeEdge { u: u32, v: u32, weight: f64 },

    #[error("self edge on vertex {0}")]
    SelfEdge(u32),

    #[error("duplicate id {0}")]
    DuplicateId(u32),

    #[error("no path from {from} to {to}")]
    NoPath { from: u32, to: u32 },

    #[error("disconnected cluster: member {member} unreachable from {from}")]
    DisconnectedCluster { member: u32, from: u32 },

    #[error("oracle budget exceeded: {what} = {size} > {limit}")]
    BudgetExceeded {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
