use thiserror::Error;

use crate::elliptic::SolveStats;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid needs at least {min} cells along {axis}, got {got}")]
    GridTooSmall {
        axis: &'static str,
        min: usize,
        got: usize,
    },

    #[error("angular box mismatch: {0}")]
    BoxMismatch(String),

    #[error("field and operator live on different grids")]
    GridMismatch,

    #[error("iteration did not converge after {} iterations (relative residual {:.3e})", .0.iterations, .0.final_relative_residual)]
    NotConverged(SolveStats),

    #[error("degenerate Nehari ray: integral of a|u|^p is {0:.3e}")]
    DegenerateRay(f64),

    #[error("outer iteration cap of {0} reached without convergence")]
    MaxOuterIterations(usize),

    #[error("fit window holds {got} radii, need at least {need}")]
    InsufficientWindow { got: usize, need: usize },

    #[error("field is identically zero")]
    ZeroField,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 1 for numerical non-convergence, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotConverged(_) | Error::DegenerateRay(_) | Error::MaxOuterIterations(_) => 1,
            _ => 2,
        }
    }
}
