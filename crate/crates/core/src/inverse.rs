//! Reverse construction: from a symplectic potential `u` on the polygon to
//! isothermal coordinates `(H, r)`.
//!
//! `r = (det Hess u)^{−1/2}` and H is the primitive of the 1-form
//! `ω = (−u^{2j} ∂_j r / r, u^{1j} ∂_j r / r)`. The form is closed exactly
//! when `u` is scalar-flat (its exterior derivative is `−s`), so the loop
//! integral of ω around a small square is a scalar-flatness diagnostic.

use rayon::prelude::*;

use crate::correspondence::{abreu_fd, ForwardMap};
use crate::harmonic::{HalfPlanePoint, ORIENTATION};
use crate::numerics::{
    fornberg_weights, integrate_1form, Jet1, Mat2, Polyline, QuadratureOptions, Vec2,
};
use crate::polytope::DelzantPolytope;
use crate::{Result, SfkError};

/// Potential, gradient, Hessian and the x-derivatives of the Hessian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub u: f64,
    pub grad: Vec2,
    pub hess: Mat2,
    /// `dhess[j] = ∂ Hess u / ∂x_j`.
    pub dhess: [Mat2; 2],
}

/// Evaluates a symplectic potential on the interior of a polygon.
pub trait PotentialSampler: Sync {
    fn domain(&self) -> &DelzantPolytope;
    fn sample(&self, x: Vec2) -> Result<MetricSample>;
}

/// Guillemin potential in the ½-normalisation, `u = ½ Σ (l_i log l_i − l_i)`.
pub fn guillemin_potential(p: &DelzantPolytope, x: Vec2) -> Result<MetricSample> {
    let l = p.facet_values(x);
    let mut s = MetricSample {
        u: 0.0,
        grad: Vec2::zeros(),
        hess: Mat2::zeros(),
        dhess: [Mat2::zeros(); 2],
    };
    for (i, &li) in l.iter().enumerate() {
        if !(li > 0.0) {
            return Err(SfkError::BoundaryEvaluation {
                facet: i + 1,
                x: [x.x, x.y],
                value: li,
            });
        }
        let n = p.normal(i);
        let nn = n * n.transpose();
        s.u += 0.5 * (li * li.ln() - li);
        s.grad += 0.5 * li.ln() * n;
        s.hess += 0.5 * nn / li;
        for j in 0..2 {
            s.dhess[j] -= 0.5 * n[j] * nn / (li * li);
        }
    }
    Ok(s)
}

#[derive(Debug, Clone)]
pub struct GuilleminSampler {
    polytope: DelzantPolytope,
}

impl GuilleminSampler {
    pub fn new(polytope: DelzantPolytope) -> Self {
        Self { polytope }
    }
}

impl PotentialSampler for GuilleminSampler {
    fn domain(&self) -> &DelzantPolytope {
        &self.polytope
    }

    fn sample(&self, x: Vec2) -> Result<MetricSample> {
        guillemin_potential(&self.polytope, x)
    }
}

/// The potential of a forward-constructed metric, evaluated by inverting
/// the moment map.
#[derive(Debug, Clone)]
pub struct PairSampler {
    fm: ForwardMap,
    polytope: DelzantPolytope,
}

impl PairSampler {
    pub fn new(fm: ForwardMap) -> Result<Self> {
        let polytope = fm
            .polytope()
            .cloned()
            .ok_or_else(|| SfkError::InvalidInput("pair sampler needs a polygon".into()))?;
        Ok(Self { fm, polytope })
    }

    pub fn forward(&self) -> &ForwardMap {
        &self.fm
    }

    /// Metric data at a known half-plane point.
    pub fn sample_at(&self, q: HalfPlanePoint) -> Result<MetricSample> {
        let m = self.fm.moment_and_potential(q)?;
        self.sample_with(q, m.u)
    }

    fn sample_with(&self, q: HalfPlanePoint, u: f64) -> Result<MetricSample> {
        let j = self.fm.pair().eval(q, 2)?;
        // A[k][a] = ∂_a ξ_k as first-order jets in (H, r).
        let a = |k: usize, ai: usize| -> Jet1 {
            let s = &j.xi[k];
            let g = if ai == 0 {
                [s.d2[0], s.d2[1]]
            } else {
                [s.d2[1], s.d2[2]]
            };
            Jet1 { v: s.d1[ai], g }
        };
        let a = [[a(0, 0), a(0, 1)], [a(1, 0), a(1, 1)]];
        let r = Jet1 { v: q.r, g: [0.0, 1.0] };
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det.v.abs() < crate::correspondence::DEGENERATE_DET {
            return Err(SfkError::DegenerateJacobian { h: q.h, r: q.r, det: det.v });
        }
        let v = (r * det).scale(ORIENTATION);
        let g = |jj: usize, kk: usize| -> Jet1 {
            (a[jj][0] * a[kk][0] + a[jj][1] * a[kk][1]).div(v)
        };
        let gj = [[g(0, 0), g(0, 1)], [g(1, 0), g(1, 1)]];
        // ∂y_a/∂x_i = σ A[i][a] / (r det)
        let rd = r.v * det.v;
        let dy = |ai: usize, i: usize| ORIENTATION * a[i][ai].v / rd;
        let mut dhess = [Mat2::zeros(); 2];
        for (i, dh) in dhess.iter_mut().enumerate() {
            for jj in 0..2 {
                for kk in 0..2 {
                    dh[(jj, kk)] = (0..2).map(|ai| dy(ai, i) * gj[jj][kk].g[ai]).sum();
                }
            }
        }
        let hess = Mat2::new(gj[0][0].v, gj[0][1].v, gj[1][0].v, gj[1][1].v);
        Ok(MetricSample {
            u,
            grad: j.value(),
            hess,
            dhess,
        })
    }
}

impl PotentialSampler for PairSampler {
    fn domain(&self) -> &DelzantPolytope {
        &self.polytope
    }

    fn sample(&self, x: Vec2) -> Result<MetricSample> {
        let q = self.fm.moment_map_inverse(x, None)?;
        let u = self.fm.potential(q)?;
        self.sample_with(q, u)
    }
}

/// `r`, `∇r` and the 1-form ω at x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsothermalJet {
    pub r: f64,
    pub grad_r: Vec2,
    pub omega: Vec2,
}

pub fn isothermal_jet(s: &MetricSample, x: Vec2) -> Result<IsothermalJet> {
    let det = s.hess.determinant();
    if !(det > 0.0) {
        return Err(SfkError::SingularHessian { x: [x.x, x.y], det });
    }
    let u = s.hess.try_inverse().ok_or(SfkError::SingularHessian { x: [x.x, x.y], det })?;
    let r = det.powf(-0.5);
    // ∂_j log r = −½ tr(U ∂_j Hess)
    let glog = Vec2::new(
        -0.5 * (u * s.dhess[0]).trace(),
        -0.5 * (u * s.dhess[1]).trace(),
    );
    let ug = u * glog;
    Ok(IsothermalJet {
        r,
        grad_r: r * glog,
        omega: Vec2::new(-ug.y, ug.x),
    })
}

/// Result of [`isothermal_coordinates`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isothermal {
    pub h: f64,
    pub r: f64,
    /// Loop integral of ω around a small square centred at x.
    pub closedness_residual: f64,
}

fn local_side(p: &DelzantPolytope, x: Vec2) -> f64 {
    let mut m = f64::INFINITY;
    for (i, l) in p.facet_values(x).into_iter().enumerate() {
        let n = p.normal(i);
        m = m.min(l / (n.x.abs() + n.y.abs()));
    }
    // A square of side 2m·0.2 around x stays inside P.
    0.4 * m
}

/// Side of the closedness square used at x (0.4 × the ℓ¹-scaled distance
/// to the nearest facet).
pub fn closedness_square_side(p: &DelzantPolytope, x: Vec2) -> f64 {
    local_side(p, x)
}

fn omega_at<S: PotentialSampler + ?Sized>(sampler: &S, x: Vec2) -> Result<[Vec2; 1]> {
    let s = sampler.sample(x)?;
    Ok([isothermal_jet(&s, x)?.omega])
}

/// Loop integral of ω around the square of side `side` centred at x.
pub fn closedness_residual<S: PotentialSampler + ?Sized>(
    sampler: &S,
    x: Vec2,
    side: f64,
    opts: &QuadratureOptions,
) -> Result<f64> {
    let q = integrate_1form(|y| omega_at(sampler, y), &Polyline::square(x, side), opts)?;
    Ok(q.value[0])
}

/// Isothermal coordinates at x, with H normalised by `H(base_x) = base_h`.
pub fn isothermal_coordinates<S: PotentialSampler + ?Sized>(
    sampler: &S,
    x: Vec2,
    base_x: Vec2,
    base_h: f64,
    opts: &QuadratureOptions,
) -> Result<Isothermal> {
    let dom = sampler.domain();
    for y in [x, base_x] {
        if !dom.contains(y) {
            return Err(SfkError::InvalidInput(format!(
                "x=({}, {}) is not interior to the polygon",
                y.x, y.y
            )));
        }
    }
    let s = sampler.sample(x)?;
    let jet = isothermal_jet(&s, x)?;
    let h = base_h
        + integrate_1form(|y| omega_at(sampler, y), &Polyline::segment(base_x, x), opts)?.value[0];
    let side = local_side(dom, x);
    let closedness_residual = closedness_residual(sampler, x, side, opts)?;
    Ok(Isothermal {
        h,
        r: jet.r,
        closedness_residual,
    })
}

/// `‖Hess u − V·DΦᵗDΦ‖ / ‖Hess u‖` at x, where `Φ = (H, r)` is differenced
/// on a stencil of path-integrated H values and `V = √det Hess u / |det DΦ|`.
pub fn conformal_factor_check<S: PotentialSampler + ?Sized>(
    sampler: &S,
    x: Vec2,
    base_x: Vec2,
    opts: &QuadratureOptions,
) -> Result<f64> {
    let dom = sampler.domain();
    let h = 0.05 * local_side(dom, x);
    let phi = |y: Vec2| -> Result<Vec2> {
        let hh = integrate_1form(|z| omega_at(sampler, z), &Polyline::segment(base_x, y), opts)?.value[0];
        let s = sampler.sample(y)?;
        Ok(Vec2::new(hh, isothermal_jet(&s, y)?.r))
    };
    // Fourth-order central differences.
    let mut dphi = Mat2::zeros();
    for j in 0..2 {
        let e = if j == 0 { Vec2::new(h, 0.0) } else { Vec2::new(0.0, h) };
        let d = (-phi(x + 2.0 * e)? + 8.0 * phi(x + e)? - 8.0 * phi(x - e)? + phi(x - 2.0 * e)?)
            / (12.0 * h);
        dphi.set_column(j, &d);
    }
    let s = sampler.sample(x)?;
    let det_phi = dphi.determinant();
    if det_phi == 0.0 {
        return Err(SfkError::SingularHessian { x: [x.x, x.y], det: 0.0 });
    }
    let v = s.hess.determinant().sqrt() / det_phi.abs();
    let model = dphi.transpose() * dphi * v;
    Ok((s.hess - model).norm() / s.hess.norm())
}

/// Abreu scalar curvature of a sampler at x (FD of `(Hess u)⁻¹`).
pub fn sampler_scalar_curvature<S: PotentialSampler + ?Sized>(sampler: &S, x: Vec2, step: f64) -> Result<f64> {
    let dom = sampler.domain();
    let mut h = [0.0; 2];
    for (j, hj) in h.iter_mut().enumerate() {
        let mut m = f64::INFINITY;
        for (i, l) in dom.facet_values(x).into_iter().enumerate() {
            if !(l > 0.0) {
                return Err(SfkError::StencilLeavesDomain { x: [x.x, x.y], step });
            }
            let c = dom.normal(i)[j].abs();
            if c > 0.0 {
                m = m.min(l / c);
            }
        }
        *hj = step * m;
    }
    let (s, _) = abreu_fd(
        |y| {
            let s = sampler.sample(y)?;
            s.hess
                .try_inverse()
                .ok_or(SfkError::SingularHessian { x: [y.x, y.y], det: s.hess.determinant() })
        },
        x,
        h,
        crate::correspondence::CURVATURE_LEVELS,
    )?;
    Ok(s)
}

/// A potential tabulated on a rectangular x-lattice (`x1,x2,u` CSV).
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialGrid {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// `u[i2 * n1 + i1]`.
    pub u: Vec<f64>,
}

pub const POTENTIAL_HEADER: &str = "x1,x2,u";
pub const ISOTHERMAL_HEADER: &str = "x1,x2,H,r,closedness_residual";

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

impl PotentialGrid {
    /// Samples `sampler` on the lattice `[x1_lo, x1_hi] × [x2_lo, x2_hi]`.
    pub fn sample<S: PotentialSampler + ?Sized>(
        sampler: &S,
        x1: (f64, f64, usize),
        x2: (f64, f64, usize),
    ) -> Result<Self> {
        if x1.2 < 7 || x2.2 < 7 {
            return Err(SfkError::InvalidInput("potential lattice needs at least 7 nodes per axis".into()));
        }
        let x1v = axis(x1.0, x1.1, x1.2);
        let x2v = axis(x2.0, x2.1, x2.2);
        let pts: Vec<Vec2> = x2v
            .iter()
            .flat_map(|&b| x1v.iter().map(move |&a| Vec2::new(a, b)))
            .collect();
        let u: Result<Vec<f64>> = pts.par_iter().map(|&x| Ok(sampler.sample(x)?.u)).collect();
        Ok(Self { x1: x1v, x2: x2v, u: u? })
    }

    pub fn n1(&self) -> usize {
        self.x1.len()
    }

    pub fn n2(&self) -> usize {
        self.x2.len()
    }

    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.u[i2 * self.n1() + i1]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(POTENTIAL_HEADER);
        s.push('\n');
        for (i2, b) in self.x2.iter().enumerate() {
            for (i1, a) in self.x1.iter().enumerate() {
                s.push_str(&format!("{a:.16e},{b:.16e},{:.16e}\n", self.at(i1, i2)));
            }
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| SfkError::InvalidInput("empty potential CSV".into()))?;
        if header.trim() != POTENTIAL_HEADER {
            return Err(SfkError::InvalidInput(format!(
                "potential CSV header must be '{POTENTIAL_HEADER}', got '{}'",
                header.trim()
            )));
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let v: std::result::Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let v = v.map_err(|e| SfkError::InvalidInput(format!("potential CSV row {}: {e}", k + 2)))?;
            if v.len() != 3 || v.iter().any(|c| !c.is_finite()) {
                return Err(SfkError::InvalidInput(format!(
                    "potential CSV row {} must have 3 finite fields",
                    k + 2
                )));
            }
            rows.push([v[0], v[1], v[2]]);
        }
        let uniq = |k: usize| -> Vec<f64> {
            let mut a: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            a.sort_by(f64::total_cmp);
            a.dedup();
            a
        };
        let (x1, x2) = (uniq(0), uniq(1));
        if x1.len() < 7 || x2.len() < 7 || x1.len() * x2.len() != rows.len() {
            return Err(SfkError::InvalidInput(format!(
                "potential CSV must be a full rectangular lattice with ≥ 7 nodes per axis \
                 ({} rows, {} × {} distinct coordinates)",
                rows.len(),
                x1.len(),
                x2.len()
            )));
        }
        let mut u = vec![f64::NAN; rows.len()];
        for r in &rows {
            let i1 = x1.binary_search_by(|a| a.total_cmp(&r[0])).expect("present");
            let i2 = x2.binary_search_by(|a| a.total_cmp(&r[1])).expect("present");
            u[i2 * x1.len() + i1] = r[2];
        }
        if u.iter().any(|v| v.is_nan()) {
            return Err(SfkError::InvalidInput("potential CSV lattice has duplicate nodes".into()));
        }
        Ok(Self { x1, x2, u })
    }

    /// Derivative operator of order `m` along one axis with 7-point Fornberg
    /// stencils (shifted near the ends), applied to a line of values.
    fn diff_line(coords: &[f64], vals: &[f64], m: usize) -> Vec<f64> {
        let n = coords.len();
        let w = 7.min(n);
        (0..n)
            .map(|i| {
                let start = i.saturating_sub(w / 2).min(n - w);
                let c = fornberg_weights(coords[i], &coords[start..start + w], m);
                (0..w).map(|k| c[m][k] * vals[start + k]).sum()
            })
            .collect()
    }

    fn d1(&self, f: &[f64], m: usize) -> Vec<f64> {
        let (n1, n2) = (self.n1(), self.n2());
        let mut out = vec![0.0; f.len()];
        for i2 in 0..n2 {
            let line = &f[i2 * n1..(i2 + 1) * n1];
            out[i2 * n1..(i2 + 1) * n1].copy_from_slice(&Self::diff_line(&self.x1, line, m));
        }
        out
    }

    fn d2(&self, f: &[f64], m: usize) -> Vec<f64> {
        let (n1, n2) = (self.n1(), self.n2());
        let mut out = vec![0.0; f.len()];
        for i1 in 0..n1 {
            let line: Vec<f64> = (0..n2).map(|i2| f[i2 * n1 + i1]).collect();
            let d = Self::diff_line(&self.x2, &line, m);
            for i2 in 0..n2 {
                out[i2 * n1 + i1] = d[i2];
            }
        }
        out
    }

    /// Finite-difference metric samples at every lattice node.
    ///
    /// With a `reference` polygon only the smooth remainder `u − u_P` is
    /// differenced; the Guillemin part `u_P` contributes exact derivatives.
    /// This removes the logarithmic facet singularity from the stencils.
    pub fn metric_samples(&self, reference: Option<&DelzantPolytope>) -> Result<Vec<MetricSample>> {
        let n1 = self.n1();
        let exact: Vec<Option<MetricSample>> = match reference {
            None => vec![None; self.u.len()],
            Some(p) => (0..self.u.len())
                .map(|k| guillemin_potential(p, Vec2::new(self.x1[k % n1], self.x2[k / n1])).map(Some))
                .collect::<Result<_>>()?,
        };
        let u: Vec<f64> = self
            .u
            .iter()
            .zip(&exact)
            .map(|(u, e)| u - e.map_or(0.0, |e| e.u))
            .collect();
        let u = &u;
        let u1 = self.d1(u, 1);
        let u2 = self.d2(u, 1);
        let u11 = self.d1(u, 2);
        let u22 = self.d2(u, 2);
        let u12 = self.d1(&u2, 1);
        let u111 = self.d1(u, 3);
        let u222 = self.d2(u, 3);
        let u112 = self.d1(&u2, 2);
        let u122 = self.d1(&u22, 1);
        Ok((0..u.len())
            .map(|k| {
                let fd = MetricSample {
                    u: u[k],
                    grad: Vec2::new(u1[k], u2[k]),
                    hess: Mat2::new(u11[k], u12[k], u12[k], u22[k]),
                    dhess: [
                        Mat2::new(u111[k], u112[k], u112[k], u122[k]),
                        Mat2::new(u112[k], u122[k], u122[k], u222[k]),
                    ],
                };
                match exact[k] {
                    None => fd,
                    Some(e) => MetricSample {
                        u: self.u[k],
                        grad: fd.grad + e.grad,
                        hess: fd.hess + e.hess,
                        dhess: [fd.dhess[0] + e.dhess[0], fd.dhess[1] + e.dhess[1]],
                    },
                }
            })
            .collect())
    }

    /// Abreu scalar curvature at every node, from lattice differences of
    /// `(Hess u)⁻¹`.
    pub fn scalar_curvature(&self, reference: Option<&DelzantPolytope>) -> Result<Vec<f64>> {
        let samples = self.metric_samples(reference)?;
        let mut uinv = [vec![0.0; samples.len()], vec![0.0; samples.len()], vec![0.0; samples.len()]];
        for (k, s) in samples.iter().enumerate() {
            let det = s.hess.determinant();
            let inv = s.hess.try_inverse().filter(|_| det > 0.0).ok_or_else(|| {
                let (i1, i2) = (k % self.n1(), k / self.n1());
                SfkError::SingularHessian {
                    x: [self.x1[i1], self.x2[i2]],
                    det,
                }
            })?;
            uinv[0][k] = inv[(0, 0)];
            uinv[1][k] = inv[(0, 1)];
            uinv[2][k] = inv[(1, 1)];
        }
        let a = self.d1(&uinv[0], 2);
        let b = self.d1(&self.d2(&uinv[1], 1), 1);
        let c = self.d2(&uinv[2], 2);
        Ok((0..samples.len()).map(|k| -0.5 * (a[k] + 2.0 * b[k] + c[k])).collect())
    }
}

/// One output row of [`invert_grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsothermalNode {
    pub x: [f64; 2],
    pub h: f64,
    pub r: f64,
    pub closedness_residual: f64,
}

/// Cubic (four-point) quadrature weights for `∫_{x_k}^{x_{k+1}}` on a
/// possibly non-uniform line, from the interpolating cubic.
fn interval_integral(xs: &[f64], fs: &[f64], k: usize) -> f64 {
    let n = xs.len();
    let start = if n < 4 {
        0
    } else {
        (k as isize - 1).clamp(0, n as isize - 4) as usize
    };
    let w = 4.min(n);
    let nodes = &xs[start..start + w];
    // Integrate the Lagrange basis exactly with 3-point Gauss–Legendre
    // (exact for cubics).
    let (a, b) = (xs[k], xs[k + 1]);
    let gl = [
        (-(0.6f64).sqrt(), 5.0 / 9.0),
        (0.0, 8.0 / 9.0),
        ((0.6f64).sqrt(), 5.0 / 9.0),
    ];
    let mut total = 0.0;
    for (t, wt) in gl {
        let x = 0.5 * (a + b) + 0.5 * (b - a) * t;
        let c = fornberg_weights(x, nodes, 0);
        let fx: f64 = (0..w).map(|j| c[0][j] * fs[start + j]).sum();
        total += wt * fx;
    }
    0.5 * (b - a) * total
}

fn cumulative(xs: &[f64], fs: &[f64], from: usize) -> Vec<f64> {
    let n = xs.len();
    let mut out = vec![0.0; n];
    for k in from..n - 1 {
        out[k + 1] = out[k] + interval_integral(xs, fs, k);
    }
    for k in (0..from).rev() {
        out[k] = out[k + 1] - interval_integral(xs, fs, k);
    }
    out
}

/// Reverse construction on a potential lattice.
///
/// H is integrated from the node `(b1, b2)` along its row and then along
/// every column, with `H(b) = base_h`. The closedness residual at a node is
/// `(∂₁ω₂ − ∂₂ω₁) Δx₁ Δx₂`, the loop integral of ω around one lattice cell.
/// See [`PotentialGrid::metric_samples`] for the role of `reference`.
pub fn invert_grid(
    grid: &PotentialGrid,
    reference: Option<&DelzantPolytope>,
    base: (usize, usize),
    base_h: f64,
) -> Result<Vec<IsothermalNode>> {
    let (n1, n2) = (grid.n1(), grid.n2());
    if base.0 >= n1 || base.1 >= n2 {
        return Err(SfkError::InvalidInput("base node outside the lattice".into()));
    }
    let samples = grid.metric_samples(reference)?;
    let mut om1 = vec![0.0; samples.len()];
    let mut om2 = vec![0.0; samples.len()];
    let mut rr = vec![0.0; samples.len()];
    for (k, s) in samples.iter().enumerate() {
        let x = Vec2::new(grid.x1[k % n1], grid.x2[k / n1]);
        let j = isothermal_jet(s, x)?;
        om1[k] = j.omega.x;
        om2[k] = j.omega.y;
        rr[k] = j.r;
    }
    let row: Vec<f64> = (0..n1).map(|i1| om1[base.1 * n1 + i1]).collect();
    let h_row = cumulative(&grid.x1, &row, base.0);
    let mut h = vec![0.0; samples.len()];
    for i1 in 0..n1 {
        let col: Vec<f64> = (0..n2).map(|i2| om2[i2 * n1 + i1]).collect();
        let hc = cumulative(&grid.x2, &col, base.1);
        for i2 in 0..n2 {
            h[i2 * n1 + i1] = base_h + h_row[i1] + hc[i2];
        }
    }
    let curl_a = grid.d1(&om2, 1);
    let curl_b = grid.d2(&om1, 1);
    let cell = |xs: &[f64], i: usize| -> f64 {
        if i + 1 < xs.len() {
            xs[i + 1] - xs[i]
        } else {
            xs[i] - xs[i - 1]
        }
    };
    Ok((0..samples.len())
        .map(|k| {
            let (i1, i2) = (k % n1, k / n1);
            IsothermalNode {
                x: [grid.x1[i1], grid.x2[i2]],
                h: h[k],
                r: rr[k],
                closedness_residual: (curl_a[k] - curl_b[k]) * cell(&grid.x1, i1) * cell(&grid.x2, i2),
            }
        })
        .collect())
}

pub fn isothermal_csv(nodes: &[IsothermalNode]) -> String {
    let mut s = String::from(ISOTHERMAL_HEADER);
    s.push('\n');
    for n in nodes {
        s.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            n.x[0], n.x[1], n.h, n.r, n.closedness_residual
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guillemin_quadrant_closed_form() {
        let s = guillemin_potential(&DelzantPolytope::quadrant(), Vec2::new(1.0, 1.0)).unwrap();
        assert!((s.u + 1.0).abs() < 1e-15);
        assert!(s.grad.norm() < 1e-15);
        assert!((s.hess - Mat2::new(0.5, 0.0, 0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn boundary_evaluation_is_an_error() {
        let e = guillemin_potential(&DelzantPolytope::quadrant(), Vec2::new(0.0, 1.0));
        assert!(matches!(e, Err(SfkError::BoundaryEvaluation { facet: 2, .. })));
    }

    #[test]
    fn cubic_interval_rule_is_exact_for_cubics() {
        let xs: Vec<f64> = (0..6).map(|i| 0.3 * i as f64 + 0.1 * (i as f64).sin()).collect();
        let f = |x: f64| 1.0 + x - 2.0 * x * x + 0.5 * x * x * x;
        let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        let prim = |x: f64| x + 0.5 * x * x - 2.0 / 3.0 * x.powi(3) + 0.125 * x.powi(4);
        let c = cumulative(&xs, &fs, 2);
        for k in 0..6 {
            assert!((c[k] - (prim(xs[k]) - prim(xs[2]))).abs() < 1e-13);
        }
    }
}
