use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A choice index fell outside its block.
    #[error("invalid assignment: block {block} has {size} rotamers, got choice {choice}")]
    InvalidAssignment {
        block: usize,
        size: usize,
        choice: usize,
    },

    /// A vector does not share the instance's block layout.
    #[error("conformance error: {0}")]
    Conformance(String),

    /// The instance datum violates a structural invariant.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The step length underflowed before the nonmonotone acceptance test held.
    #[error("line search failed at iteration {iteration}: step {alpha:e} after {trials} trials (directional derivative {g_dot_d:e})")]
    LineSearch {
        iteration: usize,
        alpha: f64,
        trials: usize,
        g_dot_d: f64,
    },

    #[error("non-finite {what} at iteration {iteration}")]
    Numeric {
        iteration: usize,
        what: &'static str,
    },

    #[error("search space of {size:e} assignments exceeds the enumeration limit {limit:e}")]
    SearchSpaceTooLarge { size: f64, limit: f64 },

    #[error("{}line {line}: {message}", path.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default())]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        message: String,
    },

    #[error("unsupported instance format: {detected}")]
    UnsupportedFormat { detected: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: None,
            line,
            message: message.into(),
        }
    }

    pub(crate) fn with_path(self, path: impl Into<PathBuf>) -> Self {
        match self {
            Error::Parse { line, message, .. } => Error::Parse {
                path: Some(path.into()),
                line,
                message,
            },
            other => other,
        }
    }
}
