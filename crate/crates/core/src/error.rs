use thiserror::Error;

/// Errors raised by the sheet model, its discretization and the optimizer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("point {x:?} is outside the domain of {op}")]
    Domain { op: &'static str, x: [f64; 2] },

    #[error("invalid resolution: {0}")]
    InvalidResolution(String),

    #[error("radius {r} is outside the mesh range [{lo}, {hi}]")]
    RadiusOutOfRange { r: f64, lo: f64, hi: f64 },

    #[error("empty integration region [{lo}, {hi}]")]
    EmptyRegion { lo: f64, hi: f64 },

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("degenerate covariance: rank {rank} < 2")]
    DegenerateCovariance { rank: usize },

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),

    #[error("snapshot row {row}: {msg}")]
    Snapshot { row: usize, msg: String },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
