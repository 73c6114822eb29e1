use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum MavError {
    /// A price, reserve, or other numeric input is outside its domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A decoded or supplied price is zero or negative.
    #[error("invalid price: {0}")]
    InvalidPrice(String),

    /// A swap would drain the pool's reserve.
    #[error("reserve depletion: requested {requested} of reserve {reserve}")]
    ReserveDepletion { requested: f64, reserve: f64 },

    /// A concentrated-liquidity swap ran out of initialized ranges before
    /// the requested amount was filled. Carries the portion that did fill.
    #[error("liquidity exhausted after filling {filled_base} base / {filled_quote} quote")]
    PartialFill { filled_base: f64, filled_quote: f64 },

    /// Too few records for a statistic (e.g. quantiles need 4 points).
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Two time series do not overlap, or a required series is empty.
    #[error("empty series: {0}")]
    EmptySeries(String),

    /// A file does not match its documented schema.
    #[error("schema error at line {line}: {message}")]
    Schema { line: u64, message: String },

    /// Records violate an ordering or uniqueness constraint.
    #[error("integrity error at line {line}: {message}")]
    Integrity { line: u64, message: String },

    /// A success-probability model returned a value outside [0, 1].
    #[error("success model returned {0}, outside [0, 1]")]
    ModelContract(f64),

    /// A simulation spec fails validation.
    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
