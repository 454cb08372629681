use std::path::PathBuf;

use thiserror::Error;

use crate::harness::RunRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no connected Erdős–Rényi graph with n={n}, r_c={r_c} after {attempts} draws")]
    RetriesExhausted { n: usize, r_c: f64, attempts: usize },

    #[error("graph is not connected")]
    Disconnected,

    #[error("mixing matrix has spectral gap {delta} >= 1 (disconnected graph or invalid weights)")]
    SpectralGapTooLarge { delta: f64 },

    #[error("rank deficient problem: {0}")]
    RankDeficient(String),

    #[error("singular normal equations")]
    SingularSystem,

    #[error("constraint violated: {0}")]
    ConstraintViolated(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{method} diverged at iteration {iteration} (relative error {rel_err:e})")]
    Diverged {
        method: String,
        iteration: usize,
        rel_err: f64,
        record: Box<RunRecord>,
    },

    #[error("fit window too short: {len} points, need at least {min}")]
    WindowTooShort { len: usize, min: usize },

    #[error("run did not converge below {required:e} (best {best:e})")]
    NotConverged { required: f64, best: f64 },

    #[error("experiment plan: {0}")]
    Plan(String),

    #[error("config: {0}")]
    Config(String),

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
