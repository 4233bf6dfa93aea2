use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("trajectory misses the inner scatterer: {0}")]
    Unreachable(String),
    #[error("velocity circle is empty: N^2/|n|^2 = {excess} exceeds E")]
    EmptyCircle { excess: f64 },
    #[error("velocity is off the velocity circle (residual {residual:e})")]
    OffCircle { residual: f64 },
    #[error("invalid base state: {0}")]
    InvalidState(String),
    #[error("operation requires the alternating case but U is nonempty")]
    NonAlternating,
    #[error("tangential component changes sign on the velocity circle (min z = {min_z})")]
    ConventionViolated { min_z: f64 },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
    #[error("particle cannot move: {0}")]
    Stuck(String),
    #[error("numerical drift: {0}")]
    NumericalDrift(String),
}
