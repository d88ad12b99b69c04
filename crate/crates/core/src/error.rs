//! Crate-wide error type.

/// Errors produced by simulation, estimation and experiment code.
///
/// The variants are deliberately coarse: the Monte Carlo harness counts
/// failures by variant, so degenerate denominators must stay distinguishable
/// from configuration mistakes and internal bugs.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A model, scheme or experiment description is invalid (non-finite
    /// parameter, negative variance, unknown kernel, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An argument is outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A ratio statistic was requested with a denominator below its guard
    /// threshold.
    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),

    /// An observation-time scheme failed to produce strictly increasing times.
    #[error("time generation failed: {0}")]
    Generation(String),

    /// A weight function violates the validity conditions.
    #[error("invalid kernel: {0}")]
    Kernel(String),

    /// Internal consistency violation; indicates a bug, not bad input.
    #[error("internal consistency violation: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
