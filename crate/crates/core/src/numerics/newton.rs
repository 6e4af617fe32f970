//! Damped Newton iteration for planar maps.

use thiserror::Error;

use super::linalg::{Mat2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("NewtonDivergence: residual {residual:e} after {iterations} iterations (best iterate ({}, {}))", best.x, best.y)]
pub struct NewtonDivergence {
    pub best: Vec2,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub abs_tol: f64,
    pub max_iter: usize,
    /// Number of step halvings tried before giving up on a direction.
    pub max_backtracks: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_iter: 100,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSolution {
    pub x: Vec2,
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `map(x) = target` starting from `guess`.
///
/// `eval` returns the map value and its Jacobian. `inside` rejects points
/// outside the domain of the map; such trial steps are treated like steps
/// that fail to decrease the residual. `damping` ∈ (0, 1] is the initial
/// fraction of the Newton step. A (near) singular Jacobian falls back to a
/// Levenberg–Marquardt regularised step.
pub fn newton2<E, F, D>(
    mut eval: F,
    inside: D,
    target: Vec2,
    guess: Vec2,
    damping: f64,
    opts: &NewtonOptions,
) -> Result<NewtonSolution, E>
where
    F: FnMut(Vec2) -> Result<(Vec2, Mat2), E>,
    D: Fn(Vec2) -> bool,
    E: From<NewtonDivergence>,
{
    let damping = damping.clamp(1e-6, 1.0);
    if !inside(guess) {
        return Err(NewtonDivergence {
            best: guess,
            residual: f64::INFINITY,
            iterations: 0,
        }
        .into());
    }
    let mut x = guess;
    let (mut fx, mut jac) = eval(x)?;
    let mut res = (fx - target).norm();
    for it in 0..opts.max_iter {
        if res <= opts.abs_tol {
            return Ok(NewtonSolution {
                x,
                residual: res,
                iterations: it,
            });
        }
        let f = fx - target;
        let step = match jac.try_inverse() {
            Some(inv) if jac.determinant().abs() > 1e-14 * jac.norm_squared().max(1e-300) => -(inv * f),
            _ => {
                let jt = jac.transpose();
                let lambda = 1e-6 * jac.norm_squared().max(1e-12);
                let a = jt * jac + Mat2::identity() * lambda;
                match a.try_inverse() {
                    Some(ai) => -(ai * (jt * f)),
                    None => Vec2::zeros(),
                }
            }
        };
        if step.norm() == 0.0 || !step.iter().all(|c| c.is_finite()) {
            break;
        }
        let mut t = damping;
        let mut accepted = false;
        for _ in 0..opts.max_backtracks {
            let trial = x + t * step;
            if inside(trial) {
                if let Ok((ft, jt)) = eval(trial) {
                    let rt = (ft - target).norm();
                    if rt.is_finite() && rt < res {
                        x = trial;
                        fx = ft;
                        jac = jt;
                        res = rt;
                        accepted = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res <= opts.abs_tol {
        return Ok(NewtonSolution {
            x,
            residual: res,
            iterations: opts.max_iter,
        });
    }
    Err(NewtonDivergence {
        best: x,
        residual: res,
        iterations: opts.max_iter,
    }
    .into())
}
