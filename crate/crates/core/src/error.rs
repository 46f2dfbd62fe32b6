use thiserror::Error;

/// Structural problems with a model: graph, weights, or policy thresholds.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("negative or non-finite weight: {0}")]
    BadWeight(String),
    #[error("field of vertex {vertex} not normalized (sum {sum})")]
    FieldNotNormalized { vertex: usize, sum: f64 },
    #[error("interaction not normalized on edge ({u}, {v}) (max entry {max})")]
    InteractionNotNormalized { u: usize, v: usize, max: f64 },
    #[error("spin count q = {0} must be at least 2")]
    TooFewSpins(usize),
    #[error("edge activity beta = {0} must be positive")]
    NonPositiveBeta(f64),
    #[error("q = {q} is below the {policy} threshold {required} for max degree {max_degree}")]
    ColorThreshold {
        q: usize,
        max_degree: usize,
        required: usize,
        policy: &'static str,
    },
    #[error("infeasible graph parameters: {0}")]
    Infeasible(String),
}

/// Failures while reading an instance document.
#[derive(Debug, Error)]
pub enum LoadError {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
}

/// Violations of the memo discipline. These indicate an engine bug.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MemoError {
    #[error("m({0}) is already set")]
    DoubleSet(i64),
    #[error("color {color} is not in L({t})")]
    AbsentColor { t: i64, color: u32 },
    #[error("m({t}) = {color} is not in the surviving list L({t})")]
    NotInList { t: i64, color: u32 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error(
        "tractability condition violated (delta_max = {delta_max}); pass force to sample anyway"
    )]
    ConditionViolated { delta_max: f64 },
    #[error("recursion budget of {budget} frames exhausted; session poisoned")]
    BudgetExceeded { budget: u64 },
    #[error("session was poisoned by an earlier budget abort")]
    Poisoned,
    #[error("vertex {0} out of range")]
    BadVertex(usize),
    #[error("invalid pinning: {0}")]
    BadPinning(String),
    #[error("list size {size} violates the entry bound {bound} at t = {t}")]
    ListBound { t: i64, size: usize, bound: usize },
    #[error(transparent)]
    Memo(#[from] MemoError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FactoryError {
    #[error("flip budget of {0} exceeded")]
    FlipBudget(u64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("enumeration of {0} configurations exceeds the cap")]
    TooLarge(f64),
    #[error("pinning has zero total weight")]
    ZeroWeight,
    #[error("invalid pinning: {0}")]
    BadPinning(String),
    #[error("vertex {0} is not part of the distribution")]
    UnknownVertex(usize),
    #[error("initial configuration is invalid: {0}")]
    BadInitial(String),
    #[error("degenerate test: {0}")]
    Degenerate(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("target vertex {0} is pinned")]
    TargetPinned(usize),
    #[error("invalid pinning: {0}")]
    BadPinning(String),
    #[error("eps and delta must lie in (0, 1)")]
    BadAccuracy,
    #[error(transparent)]
    Sample(#[from] SampleError),
}
