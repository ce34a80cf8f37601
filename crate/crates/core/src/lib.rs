//! Numerical verification of ciconia metrics on the tangent manifold of a
//! Riemann surface.
//!
//! A ciconia metric is built from a conformal chart `λ dz dz̄` of the base
//! and three weights `(f, a, h)`: `f` scales the horizontal part, `h` the
//! vertical part, and the complex scalar `a` couples them. All derivatives
//! are taken exactly with second-order jets, so residuals of the Kähler,
//! Einstein and curvature identities are accurate to rounding error.

// tensor code reads best with explicit index loops
#![allow(clippy::needless_range_loop, clippy::suspicious_arithmetic_impl)]

pub mod bundle;
pub mod commutant;
pub mod einstein;
pub mod error;
pub mod expr;
pub mod geometry4d;
pub mod jets;
pub mod kahler;
pub mod metric;
pub mod quad;
pub mod sampling;
pub mod stats;
pub mod surface;
pub mod wide;

pub use error::{Error, Result};
pub use expr::{DependenceClass, Expression};
pub use jets::{Jet2, Point4, C64};
pub use surface::{ConformalChart, Domain};
