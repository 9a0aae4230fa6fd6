//! Crate-wide error type.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root-finding or fitting routine failed to converge.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// An objective or model evaluation produced NaN where a number was required.
    #[error("evaluation failure: {0}")]
    EvaluationFailure(String),

    /// The SQH inner loop exhausted its penalty step-ups without acceptance.
    #[error(
        "optimizer stalled at iteration {iteration}: {step_ups} consecutive \
         penalty step-ups without sufficient increase (epsilon = {epsilon:.3e})"
    )]
    Stall {
        iteration: usize,
        step_ups: usize,
        epsilon: f64,
    },

    /// Input data cannot support the requested computation.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A run configuration failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// A data file failed parsing or validation.
    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Every replication (or resample) of an aggregate run failed.
    #[error("all {0} replications failed")]
    AllReplicationsFailed(usize),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
