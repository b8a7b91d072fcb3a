//! Square homeomorphisms with prescribed ω- and α-limit sets.
//!
//! The pipeline is: a normally rising map `f`, a steering homeomorphism `h`
//! with `φ = h⁻¹ f h`, and a permeating map `ξ` with `ψ = ξ φ ξ⁻¹`.
//! Every map is a [`expr::MapExpr`] supporting forward and inverse evaluation.

pub mod analysis;
pub mod enumerate;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod interval;
pub mod permeation;
pub mod rising;
pub mod scenario;
pub mod steering;

pub use error::{Error, Result};
