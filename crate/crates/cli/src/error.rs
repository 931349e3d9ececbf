use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced by the runner, each mapped onto a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("time step {tau:e} fails the stability relation (suggested {suggested:e}); pass --force-unstable to run anyway")]
    Stability { tau: f64, suggested: f64 },
    #[error("run diverged at step {step}: {cause}")]
    Diverged { step: u64, cause: String },
    #[error(transparent)]
    Solver(#[from] ckdv_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Stability { .. } => 3,
            CliError::Diverged { .. } => 4,
            CliError::Io { .. } => 1,
            CliError::Solver(e) => match e {
                ckdv_core::Error::StabilityGate { .. } => 3,
                ckdv_core::Error::Diverged { .. } | ckdv_core::Error::Blowup { .. } => 4,
                ckdv_core::Error::InvalidSystem(_)
                | ckdv_core::Error::InvalidGrid(_)
                | ckdv_core::Error::InvalidArgument(_)
                | ckdv_core::Error::InvalidConfig(_)
                | ckdv_core::Error::NonPositiveAmplitude(_)
                | ckdv_core::Error::ModeCount { .. } => 2,
                _ => 1,
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
