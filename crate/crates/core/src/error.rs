use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A qubit count or matrix size outside what dense simulation supports.
    #[error("size error: {0}")]
    Size(String),

    /// Mismatched lengths or shapes between arguments.
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    /// A parameter outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A caller violated an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Malformed canonical text (feature-map specs, config values).
    #[error("parse error: {0}")]
    Parse(String),

    /// Dataset generation or splitting could not satisfy its constraints.
    #[error("generation error: {0}")]
    Generation(String),

    /// Every feature map in the grid has been excluded.
    #[error("all feature maps in the grid are excluded")]
    Exhausted,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dim(expected: usize, got: usize, context: &'static str) -> Self {
        Error::Dimension {
            expected,
            got,
            context,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
