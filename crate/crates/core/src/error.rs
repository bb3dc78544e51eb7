use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("invalid receiver geometry: {0}")]
    InvalidGeometry(String),

    #[error("delta kernel for node {node} at ({x:.6e}, {y:.6e}) m is empty; node lies too far outside the grid")]
    EmptyKernel { node: usize, x: f64, y: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid source: {0}")]
    InvalidSource(String),

    #[error("solver became unstable at time step {step} (CFL number c_ref*dt/dx = {cfl:.4})")]
    Unstable { step: i64, cfl: f64 },

    #[error("objective became non-finite at iteration {0}")]
    NonFiniteObjective(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dense oracle needs {needed} matrix entries, above the budget of {budget}")]
    OracleBudget { needed: usize, budget: usize },

    #[error("container format: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
