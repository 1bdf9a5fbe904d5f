use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A theorem hypothesis (αβ > 1, α, β ≥ 1, ...) does not hold.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("integrator failure at r = {r:e}: step {step:e} underflowed")]
    StepUnderflow { r: f64, step: f64 },

    #[error("iteration saturated at k = {0}")]
    Saturated(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the caller's input rather than by a
    /// numerical probe.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::Hypothesis(_)
                | Error::NonFinite(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
