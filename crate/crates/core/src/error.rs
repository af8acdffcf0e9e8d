use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A numeric argument outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid scenario, weight table or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Allocation was requested while every cell is switched off.
    #[error("no active cell")]
    NoActiveCell,

    /// The MILP cannot be assembled from the given inputs.
    #[error("model build error: {0}")]
    Build(String),

    /// A solution of the linear model failed the exact nonlinear check.
    /// This must never fire; it signals a bug in the model construction.
    #[error("inner-approximation violation: {0}")]
    InnerApproximation(String),

    /// LP or B&B failure that is not an ordinary infeasible/limit status.
    #[error("solver error: {0}")]
    Solver(String),

    /// Malformed model, solution or bound table text.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
