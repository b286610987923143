//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Asked to project a path to a finer level than it carries.
    #[error("refinement error: path at level {have} cannot be projected to level {want}")]
    Refinement { have: u32, want: u32 },

    /// A parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Occupation density requested at a level where the path has an exactly
    /// flat segment; the density is genuinely undefined there.
    #[error("degenerate level {level}: path has a flat segment at this value")]
    DegenerateLevel { level: f64 },

    /// Skew equation has no solution for |beta| > 1.
    #[error("solvability error: skew parameter beta = {beta} outside [-1, 1]")]
    Solvability { beta: f64 },

    /// Time step too large for the requested dynamics.
    #[error("stability error: {0}")]
    Stability(String),

    /// A matrix factorization failed.
    #[error("factorization error: {0}")]
    Factorization(String),

    /// Two supposedly equal internal computations disagree; a bug signal.
    #[error("consistency failure: {0}")]
    Consistency(String),

    /// Config text failed to parse or validate.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed binary frame or CSV input.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
