use thiserror::Error;

use crate::numerics::{FdError, NewtonDivergence, QuadratureError};
use crate::polytope::PolytopeError;

/// Errors raised by the geometric layers.
#[derive(Debug, Error)]
pub enum SfkError {
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error("InadmissibleParameter: {0}")]
    InadmissibleParameter(String),
    #[error("NumericalUnderflow: r = {r:e} is too small to evaluate at H = {h}")]
    NumericalUnderflow { h: f64, r: f64 },
    #[error("DegenerateJacobian: |det Dξ| = {det:e} at (H,r)=({h}, {r})")]
    DegenerateJacobian { h: f64, r: f64, det: f64 },
    #[error("PathLeavesHalfPlane: path vertex (H,r)=({h}, {r}) has r < 0")]
    PathLeavesHalfPlane { h: f64, r: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    FiniteDifference(#[from] FdError),
    #[error(transparent)]
    Newton(#[from] NewtonDivergence),
    #[error("StencilLeavesDomain: stencil of size {step:e} around x=({}, {}) leaves the polygon", x[0], x[1])]
    StencilLeavesDomain { x: [f64; 2], step: f64 },
    #[error("BoundaryEvaluation: l_{facet} = {value:e} ≤ 0 at x=({}, {})", x[0], x[1])]
    BoundaryEvaluation { facet: usize, x: [f64; 2], value: f64 },
    #[error("SingularHessian: det Hess u = {det:e} at x=({}, {})", x[0], x[1])]
    SingularHessian { x: [f64; 2], det: f64 },
    #[error("AmbiguousClassification: {0}")]
    AmbiguousClassification(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: malformed files, invalid polygons, inadmissible parameters.
    Validation,
    /// A numerical kernel failed on valid input.
    Numerical,
}

impl SfkError {
    pub fn class(&self) -> ErrorClass {
        match self {
            SfkError::Polytope(_)
            | SfkError::InadmissibleParameter(_)
            | SfkError::InvalidInput(_)
            | SfkError::Io(_)
            | SfkError::Json(_) => ErrorClass::Validation,
            _ => ErrorClass::Numerical,
        }
    }
}
