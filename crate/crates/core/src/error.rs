use thiserror::Error;

pub type Result<T> = std::result::Result<T, StableError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StableError {
    #[error("invalid {field} = {value}: {reason}")]
    Domain {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("oscillatory integral did not reach tolerance {tol:e} (estimated error {estimate:e}) after {evaluations} evaluations")]
    Convergence {
        tol: f64,
        estimate: f64,
        evaluations: usize,
    },

    #[error("empty data")]
    EmptyData,

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("alpha = {alpha} is within {band} of 1; the skewness regression is undefined there")]
    NearAlphaOne { alpha: f64, band: f64 },

    #[error("empirical characteristic function has non-positive real part at k = {k} (principal arctan branch violated)")]
    BranchCut { k: f64 },

    #[error("alpha estimate {alpha} exceeds 2 and clamping is disabled")]
    AlphaOutOfRange { alpha: f64 },

    #[error("series too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("invalid k grid: {0}")]
    InvalidGrid(String),

    #[error("{0}")]
    Parse(String),

    #[error("no data rows")]
    NoData,

    #[error("empty range: {0}")]
    EmptyRange(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<StableError>,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl StableError {
    pub fn with_context(self, context: impl Into<String>) -> Self {
        StableError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error with all context layers removed.
    pub fn root(&self) -> &StableError {
        match self {
            StableError::Context { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for StableError {
    fn from(e: std::io::Error) -> Self {
        StableError::Io(e.to_string())
    }
}
