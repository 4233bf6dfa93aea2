use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration, already prefixed with
    /// `path:line`.
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] rotor_annulus::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    /// Process exit status: 2 for configuration errors, 3 when a
    /// mathematical precondition fails, 4 for numerical drift, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use rotor_annulus::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidParams(_) | E::EmptyCircle { .. } | E::OutOfRange(_) => 2,
                E::NumericalDrift(_) => 4,
                E::Unreachable(_)
                | E::NonAlternating
                | E::ConventionViolated { .. }
                | E::PreconditionUnmet(_)
                | E::Stuck(_)
                | E::InvalidState(_)
                | E::OffCircle { .. } => 3,
            },
            CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
