//! Completeness and curvature of conformal metrics `e^{-2u} g₀` on the plane.
//!
//! The crate is organised by task:
//!
//! - [`expr`]: parse, evaluate and differentiate closed-form factors.
//! - [`field`]: grid sampling, the five-point Laplacian, curvature and
//!   subharmonicity.
//! - [`asymptotics`]: the radial maximum profile `M(r, u)`, the growth
//!   exponent `α(u) = lim M(r,u)/log r` and the completeness classifier
//!   (complete exactly when `α(u) ≤ 1`).
//! - [`oracle`]: brute-force conformal path lengths and escaping-ray search,
//!   an independent check of the classifier.
//! - [`beltrami`]: the normal form `g = φ*(e^f g₀)` of an arbitrary metric via
//!   the Beltrami equation.
//! - [`deform`]: deformation paths and surfaces of revolution.

pub mod asymptotics;
pub mod beltrami;
pub mod deform;
pub mod expr;
pub mod field;
pub mod oracle;

pub use expr::{parse, Expr};
pub use field::{Lattice, MetricGrid, ScalarGrid};
