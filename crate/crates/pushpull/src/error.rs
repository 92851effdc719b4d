use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("graph generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("edge set is not symmetric: {0}")]
    NotUndirected(String),

    #[error("structure error: {0}")]
    Structure(String),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("decay not certifiable within horizon {horizon} (alpha estimate {alpha})")]
    DecayUncertifiable { horizon: usize, alpha: f64 },

    #[error("series truncation failed: tail bound {tail_bound} above tolerance after {terms} terms")]
    TruncationFailure { terms: usize, tail_bound: f64 },

    #[error("divergence at iteration {iteration}: non-finite entry in {which}")]
    Divergence { iteration: usize, which: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
