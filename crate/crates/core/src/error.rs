use serde::Serialize;
use thiserror::Error;

/// Errors raised by the numerical kernels, distributions and samplers.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type the
/// computation ran in, so that the error type stays non-generic.
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("series did not converge within {max_terms} terms (last |term| = {last_term:e})")]
    Convergence { max_terms: usize, last_term: f64 },

    #[error("cancellation: max |partial| / |value| = {ratio:e} exceeds what {limbs}-limb arithmetic can resolve")]
    Cancellation { ratio: f64, limbs: usize },

    #[error("negative probability {value:e} below clamp band -{band:e}")]
    NegativeProbability { value: f64, band: f64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("sampled value exceeds representable limit {limit}")]
    TableOverflow { limit: u64 },
}

impl Error {
    /// True for errors that come from numerical evaluation rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. }
                | Error::Cancellation { .. }
                | Error::NegativeProbability { .. }
                | Error::Range(_)
                | Error::TableOverflow { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
