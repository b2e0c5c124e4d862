use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("space mismatch: {left} points vs {right} points")]
    SpaceMismatch { left: usize, right: usize },
    #[error("operation needs at least {needed} points, got {got}")]
    DegenerateSpace { needed: usize, got: usize },
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("weights must be nonnegative and finite (index {index}: {value})")]
    InvalidWeight { index: usize, value: f64 },
    #[error("not a probability measure: weights sum to {sum}")]
    NotProbability { sum: f64 },
    #[error("function values must be finite (index {index})")]
    NonFinite { index: usize },
    #[error("floor {floor} must lie in [0, 1/{points})")]
    InvalidFloor { floor: f64, points: usize },
    #[error("grid needs at least {needed} points, got {got}")]
    InsufficientGrid { needed: usize, got: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("rate function derivative is not invertible (flat segment)")]
    NotStrictlyConvex,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("divergence kind `{0}` has no dual functional")]
    UnsupportedDual(String),
    #[error("divergence is infinite (support violation)")]
    Infinite,
    #[error("bound not licensed: optimal lambda {lambda} is not positive")]
    PositivityViolation { lambda: f64 },
    #[error("search budget must be positive")]
    InsufficientBudget,
    #[error("enumeration budget exceeded: {size} > {limit}")]
    BudgetExceeded { size: u128, limit: u128 },
    #[error("internal solver error: {0}")]
    Internal(String),
}

pub type Result<T> = core::result::Result<T, Error>;
