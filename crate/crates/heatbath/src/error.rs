use std::fmt;

/// Errors shared across the toolkit.
///
/// `InvalidParam` covers bad user input (non-positive masses, out-of-range
/// correlations, dimension mismatches) and names the offending field.
/// `Numerical` covers solver-level failures: singular collision geometry,
/// norm drift in the wave evolution, rejection-sampling exhaustion.
/// `InsufficientSamples` is raised by diagnostics that refuse to report a
/// statistic from an under-populated ensemble rather than return noise.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidParam(String),
    Numerical(String),
    InsufficientSamples(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::InsufficientSamples(msg) => write!(f, "insufficient samples: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
