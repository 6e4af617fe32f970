//! Scalar-flat Kähler toric metrics on strictly unbounded toric surfaces.
//!
//! The crate builds the ALE and generalised Taub-NUT scalar-flat metrics of a
//! strictly unbounded Delzant polygon from a pair of axisymmetric harmonic
//! functions on the half-plane, and checks the construction numerically:
//!
//! * [`polytope`] — validated polygon data, vertices and anchor parameters;
//! * [`harmonic`] — the harmonic pair ξ with exact derivatives to order 3;
//! * [`correspondence`] — moment map, symplectic potential, Hessian, scalar
//!   curvature and Newton inversion of the moment map;
//! * [`inverse`] — the reverse construction from a symplectic potential;
//! * [`verify`] — invariant suites producing a [`verify::VerificationReport`];
//! * [`numerics`] — quadrature, finite differences, Newton, fits, jets.

pub mod correspondence;
pub mod harmonic;
pub mod inverse;
pub mod numerics;
pub mod polytope;
pub mod verify;

mod error;

pub use error::{ErrorClass, SfkError};

pub type Result<T, E = SfkError> = std::result::Result<T, E>;
