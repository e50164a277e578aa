use std::io;
use std::path::PathBuf;

use thiserror::Error;
use weibull_mle::{FitError, MathError, SimError, SolverError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("convergence: {0}")]
    Convergence(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Convergence(_) => 4,
            CliError::Io { .. } => 5,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidTolerance(_) => CliError::Config(e.to_string()),
            SolverError::BracketFailure { .. } | SolverError::NoConvergence { .. } => {
                CliError::Convergence(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::NoConvergence { .. } => CliError::Convergence(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<MathError> for CliError {
    fn from(e: MathError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Fit(fit) => fit.into(),
            SimError::RedrawExhausted { .. } => CliError::Convergence(e.to_string()),
            SimError::Empty | SimError::QuantileBelowFirst(_) => CliError::Data(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}
