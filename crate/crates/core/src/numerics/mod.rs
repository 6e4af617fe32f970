//! Numerical kernels shared by the geometric modules.

pub mod fd;
pub mod fit;
pub mod jet;
pub mod linalg;
pub mod newton;
pub mod quadrature;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fd::{fd_derivative, fornberg_weights, richardson, richardson_best, FdError, FdEstimate};
pub use fit::{fit_log_coefficient, fit_power_law, linear_fit, LinearFit};
pub use jet::{Jet1, Jet2};
pub use linalg::{det2, quarter_turn, sym_eigen, Mat2, SymEigen, Vec2};
pub use newton::{newton2, NewtonDivergence, NewtonOptions, NewtonSolution};
pub use quadrature::{
    integrate, integrate_1form, Polyline, QuadEstimate, QuadratureError, QuadratureOptions,
};

/// Global numerical tolerances.
///
/// Defaults are the loosest values the verification suites are calibrated
/// for; callers may tighten them but never relax them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub quad_abs: f64,
    pub fd_rel: f64,
    pub newton_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quad_abs: 1e-11,
            fd_rel: 1e-7,
            newton_abs: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("tolerance {name} = {value:e} must be positive and no looser than the default {default:e}")]
pub struct ToleranceError {
    pub name: &'static str,
    pub value: f64,
    pub default: f64,
}

impl Tolerances {
    /// Applies overrides, refusing anything non-positive or looser than the default.
    pub fn tightened(
        quad_abs: Option<f64>,
        fd_rel: Option<f64>,
        newton_abs: Option<f64>,
    ) -> Result<Self, ToleranceError> {
        let d = Self::default();
        let pick = |name, value: Option<f64>, default: f64| match value {
            None => Ok(default),
            Some(v) if v > 0.0 && v <= default => Ok(v),
            Some(v) => Err(ToleranceError {
                name,
                value: v,
                default,
            }),
        };
        Ok(Self {
            quad_abs: pick("quad_abs", quad_abs, d.quad_abs)?,
            fd_rel: pick("fd_rel", fd_rel, d.fd_rel)?,
            newton_abs: pick("newton_abs", newton_abs, d.newton_abs)?,
        })
    }

    pub fn quadrature(&self) -> QuadratureOptions {
        QuadratureOptions::with_tol(self.quad_abs)
    }

    pub fn newton(&self) -> NewtonOptions {
        NewtonOptions {
            abs_tol: self.newton_abs,
            ..NewtonOptions::default()
        }
    }
}
