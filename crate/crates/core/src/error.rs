use thiserror::Error;

/// Errors raised by the estimators, the simulator and the metrics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular fit: smallest singular value {smallest:e} below 1e-10 x largest {largest:e}")]
    SingularFit { smallest: f64, largest: f64 },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("numerical divergence at step {step_index}: {detail}")]
    NumericalDivergence { step_index: usize, detail: String },

    #[error("undefined ratio: baseline value is zero")]
    UndefinedRatio,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
