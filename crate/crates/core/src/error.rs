use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("field order must be at least 2, got {0}")]
    InvalidOrder(u64),
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("field order {0} exceeds the supported table limits")]
    Unsupported(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("value {value} is not an element of GF({q})")]
    OutOfRange { value: u32, q: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodingError {
    #[error("message index {index} outside 1..={k}")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("vector length {got} does not match k = {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("node has rank {rank} < k = {k}")]
    NotFullRank { rank: usize, k: usize },
    #[error("payload mode is disabled for this node")]
    PayloadsDisabled,
    #[error("ground-truth messages required for payload mode")]
    MissingMessages,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("vertex {0} has no neighbors")]
    IsolatedVertex(usize),
    #[error("graph is empty")]
    EmptyGraph,
    #[error("exact computation needs n <= {limit}, got n = {n}")]
    TooLargeForExact { n: usize, limit: usize },
    #[error("graph sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(usize, usize),
    #[error("expected an undirected topology")]
    DirectedInput,
    #[error("topology has no edge weights")]
    Unweighted,
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("invalid family parameters: {0}")]
    InvalidFamily(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommError {
    #[error("model {model} cannot run on this topology: {reason}")]
    ModelTopologyMismatch { model: String, reason: String },
    #[error("state count {states} does not match topology size {n}")]
    SizeMismatch { states: usize, n: usize },
    #[error("max_rounds must be positive")]
    ZeroRounds,
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdversaryError {
    #[error("round {round}: adversary output violates the {contract} contract")]
    ContractViolated { round: u64, contract: String },
    #[error("round {round}: adversary produced {got} nodes, expected {expected}")]
    WrongSize { round: u64, expected: usize, got: usize },
    #[error("tracked dual {index} is not available to the adversary")]
    MissingKnowledge { index: usize },
    #[error("script: {0}")]
    Script(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FloodError {
    #[error("source set is empty")]
    EmptySource,
    #[error("at least one trial is required")]
    NoTrials,
    #[error("quantile needs {needed} trials without extrapolation, have {have}")]
    InsufficientTrials { needed: u64, have: u64 },
    #[error(transparent)]
    Comm(#[from] CommError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrackerError {
    #[error("tracked dual vector {0} is zero")]
    ZeroVectorTracked(usize),
    #[error("enumerating all duals of GF({q})^{k} is too large; use sampled duals")]
    TooManyDuals { q: u64, k: usize },
    #[error("need at least {needed} qualifying events, have {have}")]
    InsufficientEvents { needed: usize, have: usize },
    #[error(transparent)]
    Coding(#[from] CodingError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("weights must be non-empty")]
    EmptyWeights,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config error in `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into() }
    }
}
