use thiserror::Error;

use crate::graph::Edge;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("{edges} edges but {weights} weights")]
    LengthMismatch { edges: usize, weights: usize },
    #[error("node {node} out of range 1..={n}")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}")]
    DuplicateEdge(Edge),
    #[error("edge {edge} has non-positive weight {weight}")]
    NonPositiveWeight { edge: Edge, weight: f64 },
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("no connected sample after {0} attempts")]
    RetryBudgetExhausted(usize),
    #[error("{pair} is not an edge")]
    NotAnEdge { pair: Edge },
    #[error("effective resistance needs distinct nodes, got {0} twice")]
    SameNode(usize),
    #[error("invalid random graph parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodingError {
    #[error("linear decoder slope must be non-zero")]
    ZeroSlope,
    #[error("log-linear decoder base must exceed 1, got {0}")]
    InvalidBase(f64),
    #[error("invalid decoder: {0}")]
    InvalidDecoder(String),
    /// A received subcodeword fell outside the decoder domain. This is the
    /// attack-detection signal.
    #[error("alert: codeword {value} outside decoder domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },
    #[error("weight {0} is outside the decoder image")]
    NotInImage(f64),
    #[error("edge {0} decodes to non-positive nominal weight {1}")]
    NonPositiveNominal(Edge, f64),
    #[error("no codeword for edge {0}")]
    MissingEdge(Edge),
    #[error("codeword table does not match graph: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarginError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error("step gain {epsilon} outside (0, {upper})")]
    StepGainOutOfRange { epsilon: f64, upper: f64 },
    #[error("graph is not uniformly weighted")]
    NotUniform,
    #[error("parameter {0} must be positive")]
    NonPositiveParameter(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error("initial state has length {got}, expected {expected}")]
    StateLength { got: usize, expected: usize },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("invalid attack: {0}")]
    InvalidAttack(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("metric window [{t0}, {t1}] contains no samples")]
    EmptyWindow { t0: f64, t1: f64 },
}

/// Input errors carry the 1-based line they were detected on, when known.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Format(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
