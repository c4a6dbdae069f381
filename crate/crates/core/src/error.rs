use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("unknown outcome `{0}`")]
    UnknownOutcome(String),

    #[error("degenerate outcome distribution: every branch weight is below {threshold:e}")]
    DegenerateDistribution { threshold: f64 },

    #[error("fixed point is not unique (second-smallest singular value {gap:e} of E - 1)")]
    NonUniqueFixedPoint { gap: f64 },

    #[error("exact enumeration refused: up to {branches} branches x {per_branch} entries exceeds the budget of {budget} entries")]
    BudgetExceeded {
        branches: u128,
        per_branch: usize,
        budget: u128,
    },

    #[error("measurement condition violated (residual {residual:e}); conditional and unconditional fluxes differ")]
    MeasurementCondition { residual: f64 },

    #[error("model is not conditionally incoherent: {0}")]
    NotIncoherent(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
