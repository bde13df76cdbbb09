use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("degree histogram has no mass (all counts are zero)")]
    EmptyDistribution,

    #[error("lognormal fit failed: {0}")]
    FitFailure(String),

    #[error("infeasible plan: {0}")]
    Infeasible(String),

    #[error("quadrature did not converge: achieved error {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("group index {index} out of range for m = {m}")]
    GroupOutOfRange { index: u32, m: u32 },

    #[error("user {user} out of range for n = {n}")]
    UserOutOfRange { user: u32, n: usize },

    #[error(
        "explicit simulation needs {stubs} degree stubs, above the cap of {cap}; \
         use SamplingMethod::StubShortcut for populations of this size"
    )]
    ResourceCap { stubs: u64, cap: u64 },

    #[error("unknown retrieval strategy `{0}` (expected poll, bulk or rendezvous)")]
    UnknownStrategy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
