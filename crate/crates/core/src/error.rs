use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("empty vector")]
    EmptyVector,

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("no closed-form prox for simple term `{0}`")]
    UnsupportedProx(String),

    #[error("no closed-form inner maximizer for this dual term")]
    UnsupportedSmoothing,

    #[error("simple term must be strongly convex (mu = {0})")]
    StrongConvexityRequired(f64),

    #[error("inner iteration budget exceeded: {needed} > {cap}")]
    BudgetExceeded { needed: u64, cap: u64 },

    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("reference solver did not converge after {iterations} iterations (mapping norm {residual:e})")]
    NoConvergence { iterations: u64, residual: f64 },

    #[error("problem too large for enumeration: n = {0} (max 8)")]
    Size(usize),

    #[error("format error: {0}")]
    Format(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}
