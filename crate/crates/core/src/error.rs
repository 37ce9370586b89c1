use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index set is not downward closed: {0}")]
    InvalidSet(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("value outside its domain: {0}")]
    Domain(String),

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("linear solve failed: {message} (residual {residual:e})")]
    Solver { message: String, residual: f64 },

    #[error("Oseen iteration did not converge in {} iterations (last difference {:e})", .trace.len(), .trace.last().copied().unwrap_or(f64::NAN))]
    Divergence { trace: Vec<f64> },

    #[error("reference norm vanishes; relative error undefined")]
    UndefinedError,

    #[error("stale snapshot cache at {path}: {reason}")]
    StaleCache { path: PathBuf, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("at parameter {param:?}: {source}")]
    AtParameter {
        param: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(self, param: &[f64]) -> Self {
        Error::AtParameter {
            param: param.to_vec(),
            source: Box::new(self),
        }
    }

    /// Strips any parameter context and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtParameter { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of the full order solver (linear solve or fixed point).
    pub fn is_solver_failure(&self) -> bool {
        matches!(self.root(), Error::Solver { .. } | Error::Divergence { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
