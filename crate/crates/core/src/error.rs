use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The outer series hit its term cap before the stopping rule fired.
    #[error(
        "series did not converge within {terms} outer terms \
         (last term magnitude {last_term:.3e}, target {target:.3e})"
    )]
    NonConvergence {
        terms: usize,
        last_term: f64,
        target: f64,
    },

    #[error("requested precision of {requested} bits exceeds the configured ceiling of {ceiling} bits")]
    PrecisionCeiling { requested: u32, ceiling: u32 },

    /// An evaluation was requested outside what the context's precision covers.
    #[error("precision shortfall: {0}")]
    PrecisionShortfall(String),

    #[error("pole of the zeta function at s = 1")]
    Pole,

    #[error("zeta evaluation lost accuracy at s = {s}: {reason}")]
    LossOfAccuracy { s: String, reason: String },

    #[error("coefficient provider `{provider}` failed at j = {j}: {reason}")]
    Provider {
        provider: String,
        j: usize,
        reason: String,
    },

    #[error("every inner index was skipped for provider `{0}`")]
    DegenerateSkipSet(String),

    #[error("cache file {path}: {reason}")]
    Cache { path: PathBuf, reason: String },

    #[error("cache file {path} holds {found} bits, {requested} bits were requested")]
    InsufficientPrecision {
        path: PathBuf,
        found: u32,
        requested: u32,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
