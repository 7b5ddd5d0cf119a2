use thiserror::Error;

/// Errors raised by distribution construction and the checks built on top of it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty weight vector")]
    Empty,

    #[error("non-finite weight at index {index}")]
    NonFinite { index: usize },

    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("all weights are zero")]
    AllZero,

    #[error("total mass {total} (weights plus tail bound) is not within {tol} of 1")]
    MassMismatch { total: f64, tol: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("compounding distribution must live on {{1, 2, ...}}, got offset {offset}")]
    NotOnPositiveIntegers { offset: usize },

    #[error("support violation: p({x}) > 0 but q({x}) = 0")]
    SupportViolation { x: usize },

    #[error("distribution has zero mean")]
    ZeroMean,

    #[error("zero denominator: {0}")]
    ZeroDenominator(&'static str),

    #[error("not log-concave: {0}")]
    NotLogConcave(String),

    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter {
        name,
        value,
        reason,
    }
}
