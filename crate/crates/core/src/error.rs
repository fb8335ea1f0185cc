use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} is not finite at k = {k}")]
    NonFinite { what: &'static str, k: f64 },

    #[error("wave-number grid is empty")]
    EmptyGrid,

    #[error("parse error at byte {position}: expected one of [{}], found {found}", expected.join(", "))]
    Parse {
        position: usize,
        expected: Vec<String>,
        found: String,
    },

    #[error("degenerate resonance at k = {k}: {detail}")]
    DegenerateResonance { k: f64, detail: String },

    #[error(
        "Newton iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("characteristic polynomial cannot be rescaled at xi = 0")]
    NotRescalable,

    #[error("rescaled coefficients are not real: imaginary residue {residue:e} exceeds {limit:e}")]
    ComplexResidue { residue: f64, limit: f64 },

    #[error("expected a polynomial of degree {expected}, got degree {actual}")]
    DegreeMismatch { expected: usize, actual: usize },

    #[error("leading coefficient is zero")]
    LeadingZero,

    #[error("truncation N = {requested} is smaller than the wave truncation {wave}")]
    TruncationTooSmall { requested: usize, wave: usize },

    #[error("wave kind {wave} does not match operator kind {operator}")]
    KindMismatch {
        wave: &'static str,
        operator: &'static str,
    },

    #[error("eigenvalue iteration failed for a {dim}x{dim} matrix")]
    EigenFailure { dim: usize, dump: String },

    #[error("no sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("pencil roots could not be matched to Hill eigenvalues: residual {residual:e} exceeds {limit:e}")]
    MatchFailure { residual: f64, limit: f64 },

    #[error("{0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
