//! Crate-wide error type.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by expression handling, geometry evaluation, and the
/// submersion / invariant pipelines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("undeclared variable `{name}`")]
    UndeclaredVariable { name: String },

    #[error("unbound variable `{name}` at evaluation")]
    UnboundVariable { name: String },

    #[error("domain error: {what} in `{expr}`")]
    Domain { what: String, expr: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("variance mismatch: {0}")]
    VarianceMismatch(String),

    #[error("matrix is not orthogonal (deviation {deviation:.3e})")]
    NotOrthogonal { deviation: f64 },

    #[error("metric is singular or not positive definite at {point:?}")]
    SingularMetric { point: Vec<f64> },

    #[error("chart error: {0}")]
    Chart(String),

    #[error("not a Riemannian submersion: {0}")]
    NotSubmersion(String),

    #[error("frame construction failed: {0}")]
    FrameBreakdown(String),

    #[error("degenerate plane (denominator {denom:.3e})")]
    DegeneratePlane { denom: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("profile schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("too few sample points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("{skipped} of {total} sample points were skipped: {reason}")]
    TooManySkipped {
        skipped: usize,
        total: usize,
        reason: String,
    },

    #[error("coordinate name clash: {0}")]
    NameClash(String),

    #[error("invalid model data: {0}")]
    InvalidModel(String),

    #[error("at point {point:?}: {source}")]
    AtPoint {
        point: Vec<f64>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attach the evaluation point at which the error occurred.
    pub fn at_point(self, point: &[f64]) -> Error {
        Error::AtPoint {
            point: point.to_vec(),
            source: Box::new(self),
        }
    }
}
