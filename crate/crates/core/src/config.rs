//! Central tolerance configuration.
//!
//! All structural checks, identity verifications, and frame constructions
//! read their thresholds from a single [`Tolerances`] value so that scenario
//! files can override them in one place.

/// Numerical thresholds used across the pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Structural checks: submersion isometry deviation, closed-form
    /// cross-checks, equivalence-criterion residuals.
    pub structural: f64,
    /// Curvature/identity residuals (O'Neill identities, naturality).
    pub identity: f64,
    /// Frame orthonormality and projector idempotence.
    pub orthonormality: f64,
    /// Positive-definiteness pivot threshold (relative to the largest
    /// eigenvalue) for metric evaluation.
    pub positive_definite: f64,
    /// Threshold on |A| below which the horizontal distribution is reported
    /// integrable and warp reconstruction is allowed.
    pub integrability: f64,
    /// Relative singular-value cutoff for the signature-rank diagnostic.
    pub rank_rel: f64,
    /// Absolute singular-value floor for the signature-rank diagnostic
    /// (absorbs finite-difference noise on constant profiles).
    pub rank_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            structural: 1e-8,
            identity: 1e-7,
            orthonormality: 1e-10,
            positive_definite: 1e-12,
            integrability: 1e-6,
            rank_rel: 1e-6,
            rank_abs: 1e-4,
        }
    }
}
