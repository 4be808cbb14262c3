use thiserror::Error;

use crate::graph::NodeId;

/// Errors raised while building or querying graphs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("duplicate edge ({0}, {1}) in input")]
    DuplicateEdge(NodeId, NodeId),
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("non-finite weight on edge ({0}, {1})")]
    NonFiniteWeight(NodeId, NodeId),
    #[error("node {0} out of range")]
    NodeOutOfRange(NodeId),
    #[error("no path between the given node sets")]
    NoPath,
    #[error("sources and targets must be non-empty and disjoint")]
    BadEndpoints,
    #[error("path enumeration exceeded the cap of {0} paths")]
    PathLimit(usize),
}

/// Errors raised by the matching engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("subgraph violates a matching assumption: {0}")]
    AssumptionViolation(String),
    #[error("candidate does not share the unit's edge pattern")]
    TopologyMismatch,
    #[error("node {0} would be mapped twice")]
    NotInjective(crate::graph::NodeId),
    #[error("{nodes} field nodes exceed the exhaustive-search budget of {budget}")]
    BudgetExceeded { nodes: usize, budget: usize },
    #[error("mean edge weight over an empty edge set")]
    EmptyEdgeSet,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Errors raised by the statistical kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatError {
    #[error("quantile argument {0} outside (0, 1)")]
    QuantileRange(f64),
    #[error("need at least 2 residuals to estimate sigma, got {0}")]
    TooFewResiduals(usize),
}

/// Errors raised by the simulation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("failed to grow a {target}-node subgraph after {retries} retries")]
    GrowthFailure { target: usize, retries: usize },
    #[error(transparent)]
    Match(#[from] MatchError),
}

/// Errors raised reading or writing files and documents.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}:{line}: {what}")]
    Parse {
        path: String,
        line: usize,
        what: String,
    },
    #[error("report has no rows")]
    EmptyReport,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

/// Errors raised by geometric ingestion.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("need at least 3 non-collinear points, got {0} usable")]
    Degenerate(usize),
    #[error("non-finite coordinate at point {0}")]
    NonFinitePoint(usize),
    #[error("duplicate point at index {0}")]
    DuplicatePoint(usize),
    #[error("crop rectangle contains no points")]
    EmptyCrop,
    #[error("invalid crop rectangle: {0}")]
    InvalidRect(String),
}
