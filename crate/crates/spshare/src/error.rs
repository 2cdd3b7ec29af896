use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field order: {reason}")]
    InvalidFieldOrder { reason: String },

    #[error("element {value} is not in a field of order {order}")]
    ElementOutOfRange { value: u64, order: u128 },

    #[error("invalid probability {name}={value}")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("operands belong to different fields")]
    FieldMismatch,

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (u64, u64),
        got: (u64, u64),
    },

    #[error("matrix entry ({row}, {col}) is invalid: {reason}")]
    InvalidEntry { row: u64, col: u64, reason: String },

    #[error(
        "sparsity targets infeasible: admissible p1 interval [{lo}, {hi}] is empty ({detail})"
    )]
    InfeasibleTargets { lo: f64, hi: f64, detail: String },

    #[error("field order {order} exceeds the enumeration limit {limit}")]
    OrderTooLarge { order: u128, limit: u128 },

    #[error("{count} elements exceed the dense-iteration limit {limit}")]
    TooManyElements { count: u128, limit: u128 },

    #[error(
        "solver did not converge after {iterations} iterations \
         (objective delta {objective_delta:.3e}, constraint residuals {residuals:?})"
    )]
    NonConvergence {
        iterations: u64,
        objective_delta: f64,
        residuals: (f64, f64),
    },

    #[error("invalid placement parameters: {reason}")]
    InvalidPlanParams { reason: String },

    #[error("invalid placement plan: {reason}")]
    InvalidPlan { reason: String },

    #[error(
        "available nodes do not cover all sub-shares \
         (missing masked blocks {missing_masked:?}, missing mask blocks {missing_mask:?})"
    )]
    InsufficientCoverage {
        missing_masked: Vec<u32>,
        missing_mask: Vec<u32>,
    },

    #[error("malformed share stream at byte offset {offset}: {reason}")]
    Parse { offset: usize, reason: String },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: u64, got: u64 },
}
