use thiserror::Error;

/// Errors raised by the lab.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid spin distribution: {0}")]
    InvalidDistribution(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    /// Exact enumeration would exceed the configured number of terms.
    #[error(
        "enumeration budget exceeded: {terms} terms > limit {limit}; reduce n or use fewer atoms"
    )]
    BudgetExceeded { terms: u128, limit: u128 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last q = {last}, residual = {residual:e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        residual: f64,
    },
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn ensure_finite(v: f64, what: &'static str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(LabError::NonFinite(what))
    }
}

pub(crate) fn ensure_nonneg(v: f64, what: &str) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(LabError::InvalidParameter(format!(
            "{what} must be finite and >= 0, got {v}"
        )))
    }
}
