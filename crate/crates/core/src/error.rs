use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected} grid values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no convergence in {what} after {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("negative source: min value {min:e} is below the allowed round-off floor")]
    NegativeSource { min: f64 },

    #[error("atom at {location} lies outside the open domain (0, {length})")]
    AtomOutOfDomain { location: f64, length: f64 },

    #[error("condition violated: {0}")]
    ConditionViolated(String),

    #[error("root is not bracketed: G(0) = {g0:e} must be negative")]
    BracketError { g0: f64 },

    #[error("decay fit window has {points} grid points, need at least 8")]
    EmptyWindow { points: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for configurations where the occupied spectrum is empty and the
    /// self-consistent potential is trivially zero.
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::ConditionViolated(_))
    }
}
