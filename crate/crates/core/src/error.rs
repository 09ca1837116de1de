use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix A is rank deficient (A·Aᵀ condition estimate {condition_estimate:.3e})")]
    RankDeficient { condition_estimate: f64 },

    #[error("step size {lambda} violates 0 < lambda < min{{1/(4L), lambda_f}} = {bound}")]
    StepSize { lambda: f64, bound: f64 },

    #[error("unsupported problem: {0}")]
    Unsupported(String),

    #[error("insufficient data for rate fit: {usable} usable samples, need at least {required}")]
    InsufficientData { usable: usize, required: usize },

    #[error("trial with seed {seed} failed: {source}")]
    Trial {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("malformed {what}: {detail}")]
    Parse { what: &'static str, detail: String },
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
