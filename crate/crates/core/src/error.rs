use thiserror::Error;

use crate::absorption::AbsorptionTrace;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} = {value} exceeds the configured cap of {cap}")]
    AboveCap {
        what: &'static str,
        value: u64,
        cap: u64,
    },

    #[error("scaled-integer overflow: {0}; rerun with a wider integer width")]
    Overflow(String),

    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("quadrature failed on [{lo}, {hi}]: estimated error {error:e} after {intervals} subintervals")]
    Quadrature {
        lo: f64,
        hi: f64,
        error: f64,
        intervals: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("construction failed after {attempts} attempts: {reason}")]
    Construction {
        attempts: usize,
        reason: String,
        last_trace: Option<Box<AbsorptionTrace>>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
