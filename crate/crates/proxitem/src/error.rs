use thiserror::Error;

/// Errors surfaced by oracles, the schedule recursion, solvers, and the
/// benchmark front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite entry at index {index}: {value}")]
    NonFiniteEntry { index: usize, value: f64 },

    #[error("invalid problem class parameters: {0}")]
    InvalidParams(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("prox step must be positive, got {0}")]
    NonPositiveStep(f64),

    /// The coefficient recursion left the representable range. `max_horizon`
    /// is the last iteration count that is still supported for this `q`.
    #[error("schedule overflow at q={q}: coefficient sequence exceeds {limit:e}; maximal supported horizon for this q is {max_horizon}")]
    ScheduleOverflow {
        q: f64,
        limit: f64,
        max_horizon: usize,
    },

    #[error("reference solver exhausted {budget} iterations at tolerance {tol:e}; best residual {best_residual:e}")]
    ReferenceBudgetExhausted {
        tol: f64,
        budget: u64,
        best_residual: f64,
    },

    #[error("certificate evaluation failed: {0}")]
    Certificate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
