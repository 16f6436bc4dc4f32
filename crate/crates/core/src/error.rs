use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Unknown, missing or malformed key in a configuration document.
    #[error("config line {line}: key `{key}`: {msg}")]
    Schema { line: usize, key: String, msg: String },

    /// A sampled field violates a model invariant at lattice point (x, t).
    #[error("invariant violated by `{field}` at (x={x}, t={t}): {msg}")]
    Invariant {
        field: String,
        x: f64,
        t: f64,
        msg: String,
    },

    #[error("bad scenario parameters: {0}")]
    BadScenarioParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time levels out of order: from {from} to {to}")]
    LevelOrder { from: usize, to: usize },

    #[error("kernel matrices live on different levels")]
    LevelMismatch,

    #[error("step matrix at level {level} is singular")]
    SingularStep { level: usize },

    #[error("power iteration did not converge in {0} iterations")]
    NoConvergence(usize),

    #[error("monodromy spectral radius below floor: limit problem is trivial")]
    TrivialLimit,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("bad exponents p={p}, q={q}")]
    BadExponents { p: f64, q: f64 },

    #[error("piece endpoint {value} does not align with the lattice")]
    MisalignedPiece { value: f64 },

    #[error("limit operator is trivial; only operator decay can be compared")]
    TrivialLimitComparison,

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
