//! Numerical laboratory for magnetic hyperbolic Schrödinger equations
//!
//! ```text
//! d_t u = i (Δ_{A,+} - Δ_{A,-} + V) u,   x in R^n, t in [0, 1],
//! ```
//!
//! on a periodic box: spectral operators, the transversal gauge, the
//! pseudoconformal transform, a Lawson RK4 evolution, a Carleman inequality
//! checker and an auditor for mass-propagation lower bounds.

pub mod appell;
pub mod carleman;
pub mod catalog;
pub mod error;
pub mod expr;
pub mod fft;
pub mod field;
pub mod exact;
pub mod gauge;
pub mod massbound;
pub mod grid;
pub mod operators;
pub mod potential;
pub mod quadrature;
pub mod region;
pub mod snapshot;
pub mod solver;
pub mod spacetime;

pub use error::{Error, Result};
pub use expr::{parse_expression, Expr, Func, Wrt};
pub use field::{sample_field, ComplexField, Slot, SpectralInterpolant};
pub use grid::{Grid, SplitSignature, TimeGrid};
pub use potential::{ExprScalar, ExprVector, PotentialSpec, ScalarPotential, VectorPotential, ZeroScalar, ZeroVector};
pub use quadrature::{composite_simpson, gauss_legendre_01, gauss_legendre_01_vec, GaussLegendre};
pub use region::{grid_l2_norm, DensitySpectrum, Region, RegionNorm};
pub use spacetime::{FnField, Jet, SpaceTimeField};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
