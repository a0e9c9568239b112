use thiserror::Error;

/// Errors produced by the channel model, bounds and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index {index} out of range for a sequence of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("input sequence is empty")]
    EmptyInput,

    #[error("no finite optimum; bound is monotone in P (eta = 0)")]
    NoFiniteOptimum,

    #[error("memory N = {0} needs the generalized recursion, which is disabled")]
    UnsupportedMemory(usize),

    #[error("message table would hold {entries} entries (limit {limit})")]
    TableTooLarge { entries: u128, limit: u128 },

    #[error("output density underflowed at step {step}: {detail}")]
    Underflow { step: usize, detail: String },

    #[error("auxiliary channel is zero at (x = {x}, y = {y}) where the true channel has mass")]
    SupportViolation { x: usize, y: usize },

    #[error("infeasible mixture: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
