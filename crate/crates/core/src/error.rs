//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by graph construction, data handling, smoothing and the
/// estimation pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {node} out of range for a graph with {p} nodes")]
    NodeOutOfRange { node: usize, p: usize },

    #[error("self-loop at node {0} is not allowed")]
    SelfLoop(usize),

    #[error("duplicate edge {src} -> {dst}")]
    DuplicateEdge { src: usize, dst: usize },

    #[error("edge set contains a directed cycle")]
    Cyclic,

    #[error("path enumeration exceeded the cap of {cap} paths between {x} and {y}")]
    PathCapExceeded { x: usize, y: usize, cap: usize },

    #[error("adjustment set must exclude {node} ({role})")]
    AdjustmentContains { node: usize, role: &'static str },

    #[error("invalid node order: {0}")]
    InvalidOrder(String),

    #[error("graph perturbation infeasible: {0}")]
    PerturbInfeasible(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error("mechanism for node {node} disagrees with the graph: {detail}")]
    MechanismMismatch { node: usize, detail: String },

    #[error("unknown column '{0}'")]
    UnknownColumn(String),

    #[error("data format error: {0}")]
    DataFormat(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("kernel weights vanished at query x = {x} (sample point {index})")]
    ZeroKernelWeight { x: f64, index: usize },

    #[error("local linear system is singular at query x = {x}")]
    SingularFit { x: f64 },

    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(String),

    #[error("numeric guard tripped: {0}")]
    NumericGuard(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
