//! Forward construction: from a harmonic pair to moment coordinates, the
//! symplectic potential, the metric `Hess u`, and the scalar curvature.
//!
//! The closed 1-forms
//! `ε₁ = r(∂ξ₂/∂r dH − ∂ξ₂/∂H dr)`, `ε₂ = −r(∂ξ₁/∂r dH − ∂ξ₁/∂H dr)`
//! integrate to the moment coordinates, `dx = σ ε` with `σ = ORIENTATION`,
//! and `du = ξ₁ dx₁ + ξ₂ dx₂` integrates to the potential. Integrals run
//! along the canonical path `base → (H, r_base) → (H, r)`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::harmonic::{make_pair, AxiHarmonicPair, HalfPlanePoint, TaubNutParameter, ORIENTATION};
use crate::numerics::{
    integrate_1form, newton2, richardson_best, Jet1, Jet2, Mat2, NewtonDivergence, NewtonOptions,
    Polyline, QuadratureOptions, Tolerances, Vec2,
};
use crate::polytope::DelzantPolytope;
use crate::{Result, SfkError};

/// Determinants smaller than this are treated as singular.
pub const DEGENERATE_DET: f64 = 1e-14;

/// Dξ together with the derived scalars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianInfo {
    pub d_xi: Mat2,
    /// Raw `det Dξ`.
    pub det: f64,
    /// `V = σ r det Dξ`; positive for admissible pairs.
    pub v: f64,
    /// The raw determinant is negative (expected under `σ = −1`).
    pub orientation_flipped: bool,
}

/// `Dμ = σ r [[ξ₂,r, −ξ₂,H], [−ξ₁,r, ξ₁,H]]`: row k is `dx_k` in `(dH, dr)`.
pub fn d_mu_from(d_xi: &Mat2, r: f64) -> Mat2 {
    let s = ORIENTATION * r;
    Mat2::new(
        s * d_xi[(1, 1)],
        -s * d_xi[(1, 0)],
        -s * d_xi[(0, 1)],
        s * d_xi[(0, 0)],
    )
}

/// Rectangular lattice in the half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub h_min: f64,
    pub h_max: f64,
    pub nh: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub nr: usize,
}

impl GridSpec {
    pub fn new(h_min: f64, h_max: f64, nh: usize, r_min: f64, r_max: f64, nr: usize) -> Result<Self> {
        let g = Self {
            h_min,
            h_max,
            nh,
            r_min,
            r_max,
            nr,
        };
        let finite = [h_min, h_max, r_min, r_max].iter().all(|v| v.is_finite());
        if !finite || nh < 2 || nr < 2 || h_min >= h_max || r_min >= r_max || r_min <= 0.0 {
            return Err(SfkError::InvalidInput(format!(
                "grid {g} needs finite bounds, min < max, r_min > 0 and at least 2 nodes per axis"
            )));
        }
        Ok(g)
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    pub fn h_values(&self) -> Vec<f64> {
        Self::axis(self.h_min, self.h_max, self.nh)
    }

    pub fn r_values(&self) -> Vec<f64> {
        Self::axis(self.r_min, self.r_max, self.nr)
    }

    /// Nodes with r as the outer and H as the inner index.
    pub fn nodes(&self) -> Vec<HalfPlanePoint> {
        let hs = self.h_values();
        self.r_values()
            .into_iter()
            .flat_map(|r| hs.iter().map(move |&h| HalfPlanePoint::new(h, r)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.nh * self.nr
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{},{}:{}:{}",
            self.h_min, self.h_max, self.nh, self.r_min, self.r_max, self.nr
        )
    }
}

impl FromStr for GridSpec {
    type Err = SfkError;

    /// `Hmin:Hmax:nH,rmin:rmax:nr`, e.g. `-4:4:17,0.5:4:8`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || SfkError::InvalidInput(format!("grid '{s}' is not of the form Hmin:Hmax:nH,rmin:rmax:nr"));
        let (hp, rp) = s.split_once(',').ok_or_else(bad)?;
        let axis = |t: &str| -> Result<(f64, f64, usize)> {
            let parts: Vec<&str> = t.trim().split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            Ok((
                parts[0].trim().parse().map_err(|_| bad())?,
                parts[1].trim().parse().map_err(|_| bad())?,
                parts[2].trim().parse().map_err(|_| bad())?,
            ))
        };
        let (h0, h1, nh) = axis(hp)?;
        let (r0, r1, nr) = axis(rp)?;
        GridSpec::new(h0, h1, nh, r0, r1, nr)
    }
}

/// Moment coordinates and potential at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentValue {
    pub x: Vec2,
    pub u: f64,
    /// Quadrature error estimate (summed over the path).
    pub error: f64,
}

/// Forward map of one pair, with the vertex-anchored integration constants
/// resolved once at construction.
#[derive(Debug, Clone)]
pub struct ForwardMap {
    pair: AxiHarmonicPair,
    polytope: Option<DelzantPolytope>,
    base: HalfPlanePoint,
    quad: QuadratureOptions,
    newton: NewtonOptions,
    offset: Vec2,
    guess_table: OnceLock<Vec<(Vec2, HalfPlanePoint)>>,
}

/// Default relative step of the curvature stencil (fraction of the local
/// distance to the boundary).
pub const DEFAULT_CURVATURE_STEP: f64 = 0.2;

/// Richardson levels (`h, h/2, …`) used by the curvature stencil; the
/// extrapolant with the smallest error estimate is kept.
pub const CURVATURE_LEVELS: usize = 5;

impl ForwardMap {
    /// Base point of all path integrals.
    pub const BASE: HalfPlanePoint = HalfPlanePoint { h: 0.0, r: 1.0 };

    pub fn new(pair: AxiHarmonicPair, polytope: Option<&DelzantPolytope>, tol: &Tolerances) -> Result<Self> {
        let mut fm = Self {
            pair,
            polytope: polytope.cloned(),
            base: Self::BASE,
            quad: tol.quadrature(),
            newton: tol.newton(),
            offset: Vec2::zeros(),
            guess_table: OnceLock::new(),
        };
        if let Some(va) = fm.pair.vertex_anchor {
            let raw = fm.boundary_limit(va.anchor)?;
            fm.offset = Vec2::new(va.vertex[0], va.vertex[1]) - raw;
        }
        Ok(fm)
    }

    /// `make_pair` followed by [`ForwardMap::new`].
    pub fn for_polytope(p: &DelzantPolytope, nu: TaubNutParameter, tol: &Tolerances) -> Result<Self> {
        Self::new(make_pair(p, nu)?, Some(p), tol)
    }

    pub fn pair(&self) -> &AxiHarmonicPair {
        &self.pair
    }

    pub fn polytope(&self) -> Option<&DelzantPolytope> {
        self.polytope.as_ref()
    }

    pub fn base(&self) -> HalfPlanePoint {
        self.base
    }

    /// Integration constant added to the raw path integral of `dx`.
    pub fn offset(&self) -> Vec2 {
        self.offset
    }

    pub fn jacobian(&self, p: HalfPlanePoint) -> Result<JacobianInfo> {
        let j = self.pair.eval(p, 1)?;
        let d_xi = j.d_xi();
        let det = d_xi.determinant();
        if !(det.abs() >= DEGENERATE_DET) {
            return Err(SfkError::DegenerateJacobian { h: p.h, r: p.r, det });
        }
        Ok(JacobianInfo {
            d_xi,
            det,
            v: ORIENTATION * p.r * det,
            orientation_flipped: det < 0.0,
        })
    }

    pub fn d_mu(&self, p: HalfPlanePoint) -> Result<Mat2> {
        Ok(d_mu_from(&self.jacobian(p)?.d_xi, p.r))
    }

    /// Covectors `dx₁, dx₂, du` at a point (boundary-free evaluation).
    fn forms(&self, q: Vec2) -> Result<[Vec2; 3]> {
        let p = HalfPlanePoint { h: q.x, r: q.y };
        let j = self.pair.eval(p, 1)?;
        let dm = d_mu_from(&j.d_xi(), p.r);
        let dx1 = Vec2::new(dm[(0, 0)], dm[(0, 1)]);
        let dx2 = Vec2::new(dm[(1, 0)], dm[(1, 1)]);
        let xi = j.value();
        Ok([dx1, dx2, xi.x * dx1 + xi.y * dx2])
    }

    fn check_path(path: &Polyline) -> Result<()> {
        for v in &path.points {
            if !(v.y >= 0.0) || !v.x.is_finite() || !v.y.is_finite() {
                return Err(SfkError::PathLeavesHalfPlane { h: v.x, r: v.y });
            }
        }
        Ok(())
    }

    /// Raw integrals of `(dx₁, dx₂, du)` along a polyline in `(H, r)`.
    /// Vertices may lie on `r = 0` (the integrand is only sampled inside).
    pub fn integrate_path(&self, path: &Polyline, opts: &QuadratureOptions) -> Result<([f64; 3], f64)> {
        Self::check_path(path)?;
        let q = integrate_1form(|x| self.forms(x), path, opts)?;
        Ok((q.value, q.error))
    }

    fn canonical_path(&self, h: f64, r: f64) -> Polyline {
        Polyline::new(vec![
            self.base.as_vec(),
            Vec2::new(h, self.base.r),
            Vec2::new(h, r),
        ])
    }

    /// μ and u at `p` with their quadrature error.
    pub fn moment_and_potential(&self, p: HalfPlanePoint) -> Result<MomentValue> {
        let (v, err) = self.integrate_path(&self.canonical_path(p.h, p.r), &self.quad)?;
        Ok(MomentValue {
            x: Vec2::new(v[0], v[1]) + self.offset,
            u: v[2],
            error: err,
        })
    }

    pub fn moment_map(&self, p: HalfPlanePoint) -> Result<Vec2> {
        Ok(self.moment_and_potential(p)?.x)
    }

    /// Symplectic potential with `u(base) = 0`; its x-gradient is ξ.
    pub fn potential(&self, p: HalfPlanePoint) -> Result<f64> {
        Ok(self.moment_and_potential(p)?.u)
    }

    /// Limit of μ at the boundary point `(h, 0)`.
    pub fn boundary_limit(&self, h: f64) -> Result<Vec2> {
        let (v, _) = self.integrate_path(&self.canonical_path(h, 0.0), &self.quad)?;
        Ok(Vec2::new(v[0], v[1]) + self.offset)
    }

    /// `Hess u = Dξ Dξᵗ / V`.
    pub fn hessian_u(&self, p: HalfPlanePoint) -> Result<Mat2> {
        let j = self.jacobian(p)?;
        Ok(j.d_xi * j.d_xi.transpose() / j.v)
    }

    /// `(Hess u)⁻¹ = V (Dξ Dξᵗ)⁻¹ = σ r adj(Dξ)ᵗ adj(Dξ) / det Dξ`.
    ///
    /// The adjugate form avoids inverting `Dξ Dξᵗ`, whose condition number
    /// grows like `r⁻²` near the facets.
    pub fn inverse_hessian_u(&self, p: HalfPlanePoint) -> Result<Mat2> {
        let j = self.jacobian(p)?;
        let a = j.d_xi;
        let c0 = Vec2::new(a[(1, 1)], -a[(1, 0)]);
        let c1 = Vec2::new(-a[(0, 1)], a[(0, 0)]);
        let f = ORIENTATION * p.r / j.det;
        let off = f * c0.dot(&c1);
        Ok(Mat2::new(f * c0.norm_squared(), off, off, f * c1.norm_squared()))
    }

    fn local_opts(&self) -> QuadratureOptions {
        QuadratureOptions {
            abs_tol: self.quad.abs_tol.min(1e-13),
            ..self.quad
        }
    }

    /// `x_from + ∫ dx` along the straight segment `from → to`.
    pub fn transport(&self, from: HalfPlanePoint, x_from: Vec2, to: HalfPlanePoint) -> Result<Vec2> {
        let (v, _) = self.integrate_path(&Polyline::segment(from.as_vec(), to.as_vec()), &self.local_opts())?;
        Ok(x_from + Vec2::new(v[0], v[1]))
    }

    /// Newton solve of `μ(q) = target` using moment values transported by
    /// short segment integrals from a known point `(start, x_start)`.
    fn local_newton(
        &self,
        start: HalfPlanePoint,
        x_start: Vec2,
        target: Vec2,
        guess: HalfPlanePoint,
        opts: &NewtonOptions,
    ) -> Result<HalfPlanePoint> {
        let mut last = (start, x_start);
        let sol = newton2::<SfkError, _, _>(
            |q| {
                let qp = HalfPlanePoint { h: q.x, r: q.y };
                let x = self.transport(last.0, last.1, qp)?;
                last = (qp, x);
                Ok((x, self.d_mu(qp)?))
            },
            |q| q.y > 0.0 && q.x.is_finite(),
            target,
            guess.as_vec(),
            1.0,
            opts,
        )?;
        Ok(HalfPlanePoint::from_vec(sol.x))
    }

    /// Point `p` with `|μ(p) − x| ≤ newton_abs`.
    ///
    /// Newton iterates are tied together by short segment integrals; the
    /// converged point is re-checked against a full path integral from the
    /// base. On divergence the target is approached by continuation from the
    /// guess (or from the nearest node of a coarse lookup table).
    pub fn moment_map_inverse(&self, x: Vec2, guess: Option<HalfPlanePoint>) -> Result<HalfPlanePoint> {
        if let Some(p) = &self.polytope {
            if !p.contains(x) {
                return Err(SfkError::InvalidInput(format!(
                    "x=({}, {}) is not interior to the polygon",
                    x.x, x.y
                )));
            }
        }
        let start = match guess {
            Some(g) => g,
            None => self.table_guess(x)?,
        };
        let x_start = self.moment_map(start)?;
        let attempt = self.local_newton(start, x_start, x, start, &self.newton);
        let mut p = match attempt {
            Ok(p) => p,
            Err(SfkError::Newton(_)) => self.continuation(start, x_start, x)?,
            Err(e) => return Err(e),
        };
        // Re-anchor on the canonical path to remove accumulated drift.
        for _ in 0..3 {
            let xp = self.moment_map(p)?;
            if (xp - x).norm() <= self.newton.abs_tol {
                return Ok(p);
            }
            p = self.local_newton(p, xp, x, p, &self.newton)?;
        }
        let xp = self.moment_map(p)?;
        let residual = (xp - x).norm();
        if residual <= self.newton.abs_tol {
            Ok(p)
        } else {
            Err(NewtonDivergence {
                best: p.as_vec(),
                residual,
                iterations: self.newton.max_iter,
            }
            .into())
        }
    }

    fn continuation(&self, start: HalfPlanePoint, x_start: Vec2, x: Vec2) -> Result<HalfPlanePoint> {
        let steps = 16;
        let mut p = start;
        let mut xp = x_start;
        for k in 1..=steps {
            let t = k as f64 / steps as f64;
            let target = x_start + t * (x - x_start);
            p = self.local_newton(p, xp, target, p, &self.newton)?;
            xp = self.transport(start, x_start, p)?;
        }
        Ok(p)
    }

    fn table(&self) -> &Vec<(Vec2, HalfPlanePoint)> {
        self.guess_table.get_or_init(|| {
            let anchors = self.pair.anchors();
            let (lo, hi) = match (anchors.first(), anchors.last()) {
                (Some(&a), Some(&b)) => (a, b),
                _ => (0.0, 0.0),
            };
            let mut hs: Vec<f64> = Vec::new();
            for k in -24..=24 {
                let s = k as f64 / 4.0;
                let off = s.signum() * (s.abs().exp() - 1.0);
                hs.push(0.5 * (lo + hi) + off);
            }
            for w in anchors.windows(2) {
                for j in 1..8 {
                    hs.push(w[0] + (w[1] - w[0]) * j as f64 / 8.0);
                }
            }
            hs.sort_by(f64::total_cmp);
            let rs: Vec<f64> = (-24..=24).map(|k| 10f64.powf(k as f64 / 6.0)).collect();
            hs.par_iter()
                .flat_map_iter(|&h| {
                    // Cumulative integration along each column.
                    let mut out = Vec::with_capacity(rs.len());
                    let mut prev = self.moment_map(HalfPlanePoint::new(h, rs[0])).ok().map(|x| (HalfPlanePoint::new(h, rs[0]), x));
                    if let Some((p, x)) = prev {
                        out.push((x, p));
                    }
                    for &r in &rs[1..] {
                        let q = HalfPlanePoint::new(h, r);
                        prev = match prev {
                            Some((p, x)) => self.transport(p, x, q).ok().map(|xq| (q, xq)),
                            None => self.moment_map(q).ok().map(|xq| (q, xq)),
                        };
                        if let Some((p, x)) = prev {
                            out.push((x, p));
                        }
                    }
                    out
                })
                .collect()
        })
    }

    /// Nearest node of the coarse lookup table, measured in x.
    pub fn table_guess(&self, x: Vec2) -> Result<HalfPlanePoint> {
        self.table()
            .iter()
            .min_by(|a, b| (a.0 - x).norm().total_cmp(&(b.0 - x).norm()))
            .map(|(_, p)| *p)
            .ok_or_else(|| SfkError::InvalidInput("empty lookup table".into()))
    }

    /// Locates the point `q` near `p` with `μ(q) = x`, given `μ(p) = x0`,
    /// using only short segment integrals from `p`. Newton is run to
    /// stagnation so that `q` is as accurate as rounding allows.
    pub fn locate_near(&self, p: HalfPlanePoint, x0: Vec2, x: Vec2) -> Result<HalfPlanePoint> {
        let dm_inv = self
            .d_mu(p)?
            .try_inverse()
            .ok_or(SfkError::DegenerateJacobian { h: p.h, r: p.r, det: 0.0 })?;
        let opts = NewtonOptions {
            abs_tol: 0.0,
            max_iter: 12,
            max_backtracks: 3,
        };
        let guess = HalfPlanePoint::from_vec(p.as_vec() + dm_inv * (x - x0));
        let guess = if guess.r > 0.0 { guess } else { p };
        match self.local_newton(p, x0, x, guess, &opts) {
            Ok(q) => Ok(q),
            Err(SfkError::Newton(nd)) if nd.residual < 1e-12 * (1.0 + x0.norm()) => {
                Ok(HalfPlanePoint::from_vec(nd.best))
            }
            Err(e) => Err(e),
        }
    }

    /// Per-direction stencil spacing at `p` for relative step `step`.
    ///
    /// Along `e_j` the spacing is `step` times the smaller of the x-distance
    /// that moves `(H, r)` by `r` (the scale on which the pair varies) and
    /// the distance to the facets that `e_j` approaches.
    fn stencil_spacing(&self, p: HalfPlanePoint, x0: Vec2, step: f64) -> Result<[f64; 2]> {
        let dm_inv = self
            .d_mu(p)?
            .try_inverse()
            .ok_or(SfkError::DegenerateJacobian { h: p.h, r: p.r, det: 0.0 })?;
        let mut h = [0.0; 2];
        for (j, hj) in h.iter_mut().enumerate() {
            let mut m = p.r / dm_inv.column(j).norm();
            if let Some(poly) = &self.polytope {
                for (i, l) in poly.facet_values(x0).into_iter().enumerate() {
                    let c = poly.normal(i)[j].abs();
                    if !(l > 0.0) {
                        return Err(SfkError::StencilLeavesDomain {
                            x: [x0.x, x0.y],
                            step,
                        });
                    }
                    if c > 0.0 {
                        m = m.min(l / c);
                    }
                }
            }
            *hj = step * m;
        }
        Ok(h)
    }

    /// Abreu scalar curvature `s = −½ Σ ∂²u^{jk}/∂x_j∂x_k` at `p`, by a
    /// nine-point x-stencil of relative size `step` with three Richardson
    /// levels. Stencil points are located by Newton from `p`.
    pub fn scalar_curvature(&self, p: HalfPlanePoint, step: f64) -> Result<f64> {
        let x0 = self.moment_map(p)?;
        self.scalar_curvature_at(p, x0, step)
    }

    /// As [`ForwardMap::scalar_curvature`] with `μ(p) = x0` already known.
    pub fn scalar_curvature_at(&self, p: HalfPlanePoint, x0: Vec2, step: f64) -> Result<f64> {
        self.scalar_curvature_levels(p, x0, step, CURVATURE_LEVELS)
    }

    /// As [`ForwardMap::scalar_curvature_at`] with an explicit number of
    /// Richardson levels.
    pub fn scalar_curvature_levels(&self, p: HalfPlanePoint, x0: Vec2, step: f64, levels: usize) -> Result<f64> {
        let h = self.stencil_spacing(p, x0, step)?;
        let poly = self.polytope.clone();
        let (s, _) = abreu_fd(
            |x| {
                if let Some(poly) = &poly {
                    if !poly.contains(x) {
                        return Err(SfkError::StencilLeavesDomain {
                            x: [x0.x, x0.y],
                            step,
                        });
                    }
                }
                let q = self.locate_near(p, x0, x)?;
                self.inverse_hessian_u(q)
            },
            x0,
            h,
            levels,
        )?;
        Ok(s)
    }

    /// Scalar curvature from third derivatives of ξ via the chain rule,
    /// without any differencing. Cross-check for [`ForwardMap::scalar_curvature`].
    pub fn scalar_curvature_analytic(&self, p: HalfPlanePoint) -> Result<f64> {
        let j = self.pair.eval(p, 3)?;
        // A[k][a] = ∂_a ξ_k as a jet in y = (H, r).
        let a_jet = |k: usize, a: usize| -> Jet2 {
            let s = &j.xi[k];
            let (g, h) = if a == 0 {
                ([s.d2[0], s.d2[1]], [[s.d3[0], s.d3[1]], [s.d3[1], s.d3[2]]])
            } else {
                ([s.d2[1], s.d2[2]], [[s.d3[1], s.d3[2]], [s.d3[2], s.d3[3]]])
            };
            Jet2 { v: s.d1[a], g, h }
        };
        let a = [[a_jet(0, 0), a_jet(0, 1)], [a_jet(1, 0), a_jet(1, 1)]];
        let r = Jet2::variable(1, p.r);
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det.v.abs() < DEGENERATE_DET {
            return Err(SfkError::DegenerateJacobian { h: p.h, r: p.r, det: det.v });
        }
        // adj(Dξ) columns: (A2r, −A2H), (−A1r, A1H)
        let c0 = [a[1][1], -a[1][0]];
        let c1 = [-a[0][1], a[0][0]];
        let pref = (r.scale(ORIENTATION)).div(det);
        let uinv = [
            [pref * (c0[0] * c0[0] + c0[1] * c0[1]), pref * (c0[0] * c1[0] + c0[1] * c1[1])],
            [pref * (c0[0] * c1[0] + c0[1] * c1[1]), pref * (c1[0] * c1[0] + c1[1] * c1[1])],
        ];
        // ∂y_a/∂x_j = σ A[j][a] / (r det)
        let rd = (r * det).to_jet1();
        let jac = |aa: usize, jj: usize| -> Jet1 { a[jj][aa].to_jet1().scale(ORIENTATION).div(rd) };
        let mut s = 0.0;
        for k in 0..2 {
            let mut w = Jet1::constant(0.0);
            for jj in 0..2 {
                for aa in 0..2 {
                    w = w + jac(aa, jj) * uinv[jj][k].partial(aa);
                }
            }
            for b in 0..2 {
                s += jac(b, k).v * w.g[b];
            }
        }
        Ok(-0.5 * s)
    }
}

/// `s = −½ Σ_jk ∂²U^{jk}/∂x_j∂x_k` for a matrix field `U(x)` from a
/// nine-point stencil with spacings `h = (h₁, h₂)`, halved `levels − 1`
/// times, and Richardson extrapolation. Returns `(s, error indicator)`.
pub fn abreu_fd<F>(mut u_inv: F, x0: Vec2, h: [f64; 2], levels: usize) -> Result<(f64, f64)>
where
    F: FnMut(Vec2) -> Result<Mat2>,
{
    let c = u_inv(x0)?;
    let mut d = Vec::with_capacity(levels);
    for k in 0..levels {
        let scale = f64::powi(2.0, -(k as i32));
        let (h1, h2) = (h[0] * scale, h[1] * scale);
        let at = |f: &mut F, i: f64, j: f64| f(x0 + Vec2::new(i * h1, j * h2));
        let e1p = at(&mut u_inv, 1.0, 0.0)?;
        let e1m = at(&mut u_inv, -1.0, 0.0)?;
        let e2p = at(&mut u_inv, 0.0, 1.0)?;
        let e2m = at(&mut u_inv, 0.0, -1.0)?;
        let pp = at(&mut u_inv, 1.0, 1.0)?;
        let pm = at(&mut u_inv, 1.0, -1.0)?;
        let mp = at(&mut u_inv, -1.0, 1.0)?;
        let mm = at(&mut u_inv, -1.0, -1.0)?;
        let d11 = (e1p[(0, 0)] - 2.0 * c[(0, 0)] + e1m[(0, 0)]) / (h1 * h1);
        let d22 = (e2p[(1, 1)] - 2.0 * c[(1, 1)] + e2m[(1, 1)]) / (h2 * h2);
        let d12 = (pp[(0, 1)] - pm[(0, 1)] - mp[(0, 1)] + mm[(0, 1)]) / (4.0 * h1 * h2);
        d.push(-0.5 * (d11 + 2.0 * d12 + d22));
    }
    Ok(richardson_best(&d))
}

/// One lattice node of a chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartNode {
    pub h: f64,
    pub r: f64,
    pub x: [f64; 2],
    pub u: f64,
    /// `[h11, h12, h22]` of `Hess u`.
    pub hess: [f64; 3],
    pub v: f64,
    pub s_resid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeViolation {
    pub index: usize,
    pub h: f64,
    pub r: f64,
    pub what: String,
}

/// Sampled metric data over a lattice.
#[derive(Debug, Clone)]
pub struct MetricChart {
    pub pair: AxiHarmonicPair,
    pub grid: GridSpec,
    pub nodes: Vec<ChartNode>,
    pub violations: Vec<NodeViolation>,
}

pub const CHART_HEADER: &str = "H,r,x1,x2,u,h11,h12,h22,V,s_resid";

fn node_at(fm: &ForwardMap, p: HalfPlanePoint, step: f64) -> (ChartNode, Vec<String>) {
    let mut issues = Vec::new();
    let mut node = ChartNode {
        h: p.h,
        r: p.r,
        x: [f64::NAN; 2],
        u: f64::NAN,
        hess: [f64::NAN; 3],
        v: f64::NAN,
        s_resid: f64::NAN,
    };
    match fm.moment_and_potential(p) {
        Ok(m) => {
            node.x = [m.x.x, m.x.y];
            node.u = m.u;
        }
        Err(e) => issues.push(e.to_string()),
    }
    match fm.jacobian(p) {
        Ok(j) => {
            node.v = j.v;
            let hs = j.d_xi * j.d_xi.transpose() / j.v;
            node.hess = [hs[(0, 0)], hs[(0, 1)], hs[(1, 1)]];
            if !(j.v > 0.0) {
                issues.push(format!("V ≤ 0 (V = {:e})", j.v));
            } else if crate::numerics::sym_eigen(&hs).min() <= 0.0 {
                issues.push("Hess u not positive definite".into());
            }
        }
        Err(e) => issues.push(e.to_string()),
    }
    let x = Vec2::new(node.x[0], node.x[1]);
    if let (Some(poly), true) = (fm.polytope(), node.x[0].is_finite()) {
        if !poly.contains(x) {
            issues.push(format!("μ = ({}, {}) outside the polygon", x.x, x.y));
        }
    }
    if issues.is_empty() {
        match fm.scalar_curvature_at(p, x, step) {
            Ok(s) => node.s_resid = s,
            Err(e) => issues.push(e.to_string()),
        }
    }
    (node, issues)
}

/// Evaluates the chart over `grid` in parallel; results are ordered by the
/// lattice (r outer, H inner), independent of the thread count.
pub fn build_chart(fm: &ForwardMap, grid: &GridSpec, step: f64) -> MetricChart {
    let nodes = grid.nodes();
    let evaluated: Vec<(ChartNode, Vec<String>)> =
        nodes.par_iter().map(|&p| node_at(fm, p, step)).collect();
    let mut violations = Vec::new();
    let mut out = Vec::with_capacity(evaluated.len());
    for (index, (node, issues)) in evaluated.into_iter().enumerate() {
        for what in issues {
            violations.push(NodeViolation {
                index,
                h: node.h,
                r: node.r,
                what,
            });
        }
        out.push(node);
    }
    MetricChart {
        pair: fm.pair().clone(),
        grid: *grid,
        nodes: out,
        violations,
    }
}

impl MetricChart {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Largest |s| over the nodes, with its index.
    pub fn max_abs_scalar_curvature(&self) -> (f64, Option<usize>) {
        let mut best = (0.0, None);
        for (i, n) in self.nodes.iter().enumerate() {
            let a = n.s_resid.abs();
            if a.is_nan() {
                return (f64::NAN, Some(i));
            }
            if a > best.0 || best.1.is_none() {
                best = (a, Some(i));
            }
        }
        best
    }

    /// First node with `V ≤ 0`, if any.
    pub fn first_nonpositive_v(&self) -> Option<&ChartNode> {
        self.nodes.iter().find(|n| !(n.v > 0.0))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.nodes.len() * 220);
        s.push_str(CHART_HEADER);
        s.push('\n');
        for n in &self.nodes {
            let vals = [
                n.h, n.r, n.x[0], n.x[1], n.u, n.hess[0], n.hess[1], n.hess[2], n.v, n.s_resid,
            ];
            let row: Vec<String> = vals.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Parses a chart CSV (exact header required).
pub fn parse_chart_csv(text: &str) -> Result<Vec<ChartNode>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| SfkError::InvalidInput("empty chart CSV".into()))?;
    if header.trim() != CHART_HEADER {
        return Err(SfkError::InvalidInput(format!(
            "chart CSV header must be '{CHART_HEADER}', got '{}'",
            header.trim()
        )));
    }
    let mut out = Vec::new();
    for (ln, line) in lines.enumerate() {
        let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| SfkError::InvalidInput(format!("chart CSV row {}: {e}", ln + 2)))?;
        if vals.len() != 10 {
            return Err(SfkError::InvalidInput(format!(
                "chart CSV row {} has {} fields, expected 10",
                ln + 2,
                vals.len()
            )));
        }
        out.push(ChartNode {
            h: vals[0],
            r: vals[1],
            x: [vals[2], vals[3]],
            u: vals[4],
            hess: [vals[5], vals[6], vals[7]],
            v: vals[8],
            s_resid: vals[9],
        });
    }
    if out.is_empty() {
        return Err(SfkError::InvalidInput("chart CSV has no rows".into()));
    }
    Ok(out)
}
