use thiserror::Error;

/// Errors raised anywhere in the reduction, fitting and assembly pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular matrix: pivot {pivot:.3e} at column {column} below threshold {threshold:.3e}")]
    Singular {
        column: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("rank deficiency: {0}")]
    RankDeficient(String),

    #[error("system is not asymptotically stable: eigenvalue with real part {real_part:.6e}")]
    Unstable { real_part: f64 },

    #[error("problem size {size} exceeds the supported maximum of {limit}")]
    SizeLimit { size: usize, limit: usize },

    #[error("iteration did not converge: {0}")]
    NotConverged(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("degenerate shifts: {0}")]
    DegenerateShift(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    /// Wrap an error with the name of the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, unwrapping any stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by malformed user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self.root(),
            Error::InvalidInput(_)
                | Error::Parse(_)
                | Error::Json(_)
                | Error::Io(_)
                | Error::DimensionMismatch(_)
                | Error::Unsupported(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
