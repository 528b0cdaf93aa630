//! Differential invariants of Riemannian submersions.
//!
//! Charts and metrics are described symbolically; Christoffel symbols,
//! curvature, the O'Neill tensors of a submersion, and their covariant
//! derivatives are assembled as exact symbolic fields and only evaluated
//! numerically at sample points. On top of that sit scalar invariant
//! profiles, signature sampling, a rank-based genericity diagnostic, and
//! profile comparison, plus closed-form model families (products, warped
//! products, the Hopf fibration, Killing-orbit submersions) with their
//! reconstruction and equivalence checkers.

pub mod config;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod invariants;
pub mod models;
pub mod submersion;
pub mod tensor;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use expr::Expr;
pub use tensor::{TensorValue, Variance};
