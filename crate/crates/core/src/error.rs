use alloc::string::String;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid truncates {lost:e} of the probability mass (tolerance {tolerance:e})")]
    DomainTruncation { lost: f64, tolerance: f64 },

    #[error("incompatible representations: {0}")]
    IncompatibleRepresentation(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("invalid case: {0}")]
    InvalidCase(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
