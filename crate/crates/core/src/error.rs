use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("alpha = {0} is outside [1/2, 1) ∪ (1, ∞]")]
    InvalidAlpha(f64),

    #[error("invalid Schmidt spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid lambda: {0}")]
    InvalidLambda(String),

    #[error("invalid pure state: {0}")]
    InvalidState(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("Kraus operators are not trace preserving (deviation {0:e})")]
    NotTracePreserving(f64),

    #[error("subset carries mass {0}, expected 1/2")]
    SubsetMass(f64),

    #[error("SUBSET-SUM instance has {0} items, oracle limit is 50")]
    InstanceTooLarge(usize),

    #[error("invalid SUBSET-SUM instance: {0}")]
    InvalidInstance(String),

    #[error("construction not defined: {0}")]
    Unsupported(String),

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("negative cell probability {0:e}")]
    NegativeProbability(f64),
}
