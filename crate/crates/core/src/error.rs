use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("alpha must lie in the open interval {lo}..{hi}, got {value}")]
    AlphaOutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time grid must be strictly increasing (violated at index {index})")]
    NonMonotoneGrid { index: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("integrand and noise grids differ")]
    GridMismatch,

    #[error("extend_dimension needs m_new >= m (m = {current}, m_new = {requested})")]
    DimensionNotExtended { current: usize, requested: usize },

    #[error("negative time {0} passed to the semigroup")]
    NegativeTime(f64),

    #[error("rule at step {step} looked ahead to state index {requested}")]
    NotAdapted { step: usize, requested: usize },

    #[error("p = {p} must satisfy 0 < p < alpha = {alpha}")]
    MomentOrder { p: f64, alpha: f64 },

    #[error("trial points coincide (pair {0})")]
    DegeneratePair(usize),

    #[error("Picard iteration did not converge: gap {gap:e} after {iterations} iterations (tol {tol:e})")]
    NonConvergence { iterations: usize, gap: f64, tol: f64 },

    #[error("gluing failed on piece {piece}: {source}")]
    PieceFailed {
        piece: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("hypothesis violated at grid index {index} by {excess:e}")]
    HypothesisFailed { index: usize, excess: f64 },

    #[error("need at least {needed} samples, got {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("quadrature supports dimension <= 3, got {0}")]
    QuadratureDimension(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_alpha(alpha: f64, lo: f64, hi: f64) -> Result<()> {
    if alpha.is_finite() && alpha > lo && alpha < hi {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange { value: alpha, lo, hi })
    }
}
