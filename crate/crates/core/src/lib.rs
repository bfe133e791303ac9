//! Genus-one CMC-1 faces with two ends in de Sitter 3-space.
//!
//! The surfaces come from the Weierstrass data `G = w`, `Q = c dz dw / w` on
//! the twice-punctured torus `w^2 = (z+1)(z-a)/((z-1)(z+a))`. The crate
//! integrates the holomorphic frame along paths on the curve, builds the
//! three generator monodromies from two half-path integrations, solves the
//! SU(1,1) period problem in `c`, classifies the ends and samples the
//! resulting surface.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
mod dd;
pub mod ends;
pub mod error;
pub mod geometry;
pub mod linalg2c;
pub mod monodromy;
pub mod period;
mod rk;
pub mod scalar;
pub mod transport;

pub use curve::{CanonicalPaths, CurveParams, CurvePoint, PathSpec};
pub use error::{Error, Result};
pub use linalg2c::{ConjugacyKind, ConjugacyType, Mat2, Mat2C};
pub use rk::IntegratorConfig;
pub use scalar::{Dd, Real};
