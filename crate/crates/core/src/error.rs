use thiserror::Error;

/// Errors raised across the toolkit. Each variant maps to one failure mode of
/// an operation; callers (notably the CLI) map them to exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate form: eigenvalue {eigenvalue:e} below cutoff {cutoff:e}")]
    DegenerateForm { eigenvalue: f64, cutoff: f64 },

    #[error("pair is not of type I (classified as {0})")]
    NotTypeI(String),

    #[error("ill-conditioned reduction: rescaling factor {0:e} exceeds 1e8")]
    IllConditioned(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("element is not in component {0}")]
    WrongComponent(&'static str),

    #[error("unsupported signature (p, q) = ({p}, {q})")]
    BadSignature { p: usize, q: usize },

    #[error("enumeration guard: predicted {predicted:e} nodes exceeds {limit:e}")]
    ExplosionGuard { predicted: f64, limit: f64 },

    #[error("mode unavailable: {0}")]
    ModeUnavailable(String),

    #[error("guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("degenerate pivot: {0}")]
    DegeneratePivot(String),

    #[error("unsupported radius r = {0:e} (must exceed 1e-9)")]
    UnsupportedR(f64),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("ambiguous direction: {0}")]
    AmbiguousDirection(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
