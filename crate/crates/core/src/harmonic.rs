//! Axisymmetric harmonic pairs on the half-plane `ℍ = {(H, r) : r > 0}`.
//!
//! A pair `ξ = (ξ₁, ξ₂)` solves `ξ_HH + ξ_rr + ξ_r / r = 0` componentwise and
//! is stored as a linear combination of the basis functions
//! `log r`, `log(h + ρ)` with `h = H − a`, `ρ = √(h² + r²)`, `H` and `1`,
//! each of which solves the equation on its own. All partial derivatives up
//! to order three are closed-form.

use serde::{Deserialize, Serialize};

use crate::numerics::{det2, Vec2};
use crate::polytope::{in_admissible_cone, AnchorSequence, DelzantPolytope};
use crate::{Result, SfkError};

/// Orientation sign relating the closed 1-forms to the moment coordinates:
/// `dx = ORIENTATION · ε`. With this sign `V = ORIENTATION · r · det Dξ`
/// is positive for every admissible pair.
pub const ORIENTATION: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlanePoint {
    pub h: f64,
    pub r: f64,
}

impl HalfPlanePoint {
    /// Interior point; panics on `r <= 0` or non-finite input.
    pub fn new(h: f64, r: f64) -> Self {
        Self::try_new(h, r).expect("half-plane point needs finite H and r > 0")
    }

    pub fn try_new(h: f64, r: f64) -> Result<Self> {
        if h.is_finite() && r.is_finite() && r > 0.0 {
            Ok(Self { h, r })
        } else {
            Err(SfkError::InvalidInput(format!(
                "half-plane point (H,r)=({h}, {r}) needs r > 0"
            )))
        }
    }

    pub fn as_vec(self) -> Vec2 {
        Vec2::new(self.h, self.r)
    }

    pub fn from_vec(v: Vec2) -> Self {
        Self { h: v.x, r: v.y }
    }
}

/// Parameter ν of the Taub-NUT deformation; `ν = 0` is the ALE metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaubNutParameter {
    pub nu: [f64; 2],
}

impl TaubNutParameter {
    pub fn ale() -> Self {
        Self { nu: [0.0, 0.0] }
    }

    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { nu: [alpha, beta] }
    }

    pub fn is_ale(&self) -> bool {
        self.nu == [0.0, 0.0]
    }

    pub fn vec(&self) -> Vec2 {
        Vec2::new(self.nu[0], self.nu[1])
    }
}

/// A scalar function with partials up to order 3 in `(H, r)`.
///
/// `d1 = [∂H, ∂r]`, `d2 = [HH, Hr, rr]`, `d3 = [HHH, HHr, Hrr, rrr]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScalarJet {
    pub v: f64,
    pub d1: [f64; 2],
    pub d2: [f64; 3],
    pub d3: [f64; 4],
}

impl ScalarJet {
    fn axpy(&mut self, c: f64, o: &ScalarJet) {
        self.v += c * o.v;
        for i in 0..2 {
            self.d1[i] += c * o.d1[i];
        }
        for i in 0..3 {
            self.d2[i] += c * o.d2[i];
        }
        for i in 0..4 {
            self.d3[i] += c * o.d3[i];
        }
    }

    /// `f_HH + f_rr + f_r / r` at radius `r`.
    pub fn laplace_residual(&self, r: f64) -> f64 {
        self.d2[0] + self.d2[2] + self.d1[1] / r
    }
}

/// Both components of a pair with their partials.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PairJet {
    pub xi: [ScalarJet; 2],
}

impl PairJet {
    pub fn value(&self) -> Vec2 {
        Vec2::new(self.xi[0].v, self.xi[1].v)
    }

    /// Dξ with rows `(∂ξ_k/∂H, ∂ξ_k/∂r)`.
    pub fn d_xi(&self) -> crate::numerics::Mat2 {
        crate::numerics::Mat2::new(
            self.xi[0].d1[0],
            self.xi[0].d1[1],
            self.xi[1].d1[0],
            self.xi[1].d1[1],
        )
    }
}

/// Anything that can be evaluated like a harmonic pair (including fields
/// that are not harmonic, for negative controls).
pub trait HalfPlaneField {
    /// Value and partials up to `order` (0..=3); higher partials may be zero
    /// when not requested.
    fn jet(&self, p: HalfPlanePoint, order: u8) -> Result<PairJet>;
}

/// Componentwise residual of `ξ_HH + ξ_rr + ξ_r / r`.
pub fn pde_residual<F: HalfPlaneField + ?Sized>(field: &F, p: HalfPlanePoint) -> Result<[f64; 2]> {
    let j = field.jet(p, 2)?;
    Ok([
        j.xi[0].laplace_residual(p.r),
        j.xi[1].laplace_residual(p.r),
    ])
}

fn log_r_jet(r: f64) -> ScalarJet {
    let ir = 1.0 / r;
    ScalarJet {
        v: r.ln(),
        d1: [0.0, ir],
        d2: [0.0, 0.0, -ir * ir],
        d3: [0.0, 0.0, 0.0, 2.0 * ir * ir * ir],
    }
}

/// `log(h + √(h² + r²))` and its partials, stable for `h < 0`, small `r`.
pub fn log_h_plus_rho(h: f64, r: f64) -> ScalarJet {
    let rho = h.hypot(r);
    let r2 = r * r;
    let (v, q) = if h >= 0.0 {
        ((h + rho).ln(), 1.0 / (rho * (h + rho)))
    } else {
        // h + ρ = r² / (ρ − h)
        (2.0 * r.ln() - (rho - h).ln(), (rho - h) / (rho * r2))
    };
    let rho2 = rho * rho;
    let rho3 = rho2 * rho;
    let rho5 = rho3 * rho2;
    let w = r * (h + 2.0 * rho) / rho;
    let w_r = 2.0 + (h / rho).powi(3);
    let q_r = -w * q * q;
    let q_rr = -w_r * q * q + 2.0 * w * w * q * q * q;
    ScalarJet {
        v,
        d1: [1.0 / rho, r * q],
        d2: [-h / rho3, -r / rho3, q + r * q_r],
        d3: [
            (2.0 * h * h - r2) / rho5,
            3.0 * h * r / rho5,
            (2.0 * r2 - h * h) / rho5,
            2.0 * q_r + r * q_rr,
        ],
    }
}

/// One `log(H − anchor + ρ)` summand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpTerm {
    pub coeff: [f64; 2],
    pub anchor: f64,
}

/// Vertex anchoring used to fix the integration constants of the moment map:
/// the boundary limit of μ at `(anchor, 0)` is `vertex`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexAnchor {
    pub anchor: f64,
    pub vertex: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiHarmonicPair {
    pub log_r_coeff: [f64; 2],
    pub jumps: Vec<JumpTerm>,
    pub linear_coeff: [f64; 2],
    pub constant: [f64; 2],
    /// Present for pairs built from a polygon.
    pub vertex_anchor: Option<VertexAnchor>,
}

impl AxiHarmonicPair {
    pub fn new(log_r_coeff: [f64; 2], jumps: Vec<JumpTerm>, linear_coeff: [f64; 2]) -> Self {
        Self {
            log_r_coeff,
            jumps,
            linear_coeff,
            constant: [0.0, 0.0],
            vertex_anchor: None,
        }
    }

    pub fn anchors(&self) -> Vec<f64> {
        self.jumps.iter().map(|j| j.anchor).collect()
    }

    /// Copy with jump coefficient `i` multiplied by `factor`.
    pub fn with_scaled_jump(&self, i: usize, factor: f64) -> Self {
        let mut p = self.clone();
        p.jumps[i].coeff[0] *= factor;
        p.jumps[i].coeff[1] *= factor;
        p
    }

    /// Copy with the linear term replaced.
    pub fn with_linear(&self, nu: [f64; 2]) -> Self {
        let mut p = self.clone();
        p.linear_coeff = nu;
        p
    }

    /// Evaluates ξ and its partials up to `order`.
    pub fn eval(&self, p: HalfPlanePoint, order: u8) -> Result<PairJet> {
        let HalfPlanePoint { h, r } = p;
        if !(r > 0.0) || !h.is_finite() || !r.is_finite() {
            return Err(SfkError::PathLeavesHalfPlane { h, r });
        }
        if r * r < f64::MIN_POSITIVE {
            return Err(SfkError::NumericalUnderflow { h, r });
        }
        let mut out = PairJet::default();
        let lr = log_r_jet(r);
        for k in 0..2 {
            out.xi[k].axpy(self.log_r_coeff[k], &lr);
            out.xi[k].v += self.linear_coeff[k] * h + self.constant[k];
            out.xi[k].d1[0] += self.linear_coeff[k];
        }
        for t in &self.jumps {
            let f = log_h_plus_rho(h - t.anchor, r);
            for k in 0..2 {
                out.xi[k].axpy(t.coeff[k], &f);
            }
        }
        if order < 3 {
            for k in 0..2 {
                out.xi[k].d3 = [0.0; 4];
            }
        }
        if order < 2 {
            for k in 0..2 {
                out.xi[k].d2 = [0.0; 3];
            }
        }
        Ok(out)
    }

    /// Signed `V = ORIENTATION · r · det Dξ`.
    pub fn signed_v(&self, p: HalfPlanePoint) -> Result<f64> {
        let j = self.eval(p, 1)?;
        Ok(ORIENTATION * p.r * j.d_xi().determinant())
    }

    /// First probe point (from a fixed deterministic set spanning scales
    /// 10⁻³…10⁴ around the anchors) where `V ≤ 0`, if any.
    pub fn nonpositive_v_probe(&self) -> Option<HalfPlanePoint> {
        let anchors = self.anchors();
        let centre = if anchors.is_empty() {
            0.0
        } else {
            0.5 * (anchors[0] + anchors[anchors.len() - 1])
        };
        let scales = [1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0, 1e3, 1e4];
        let dirs = [
            -0.999, -0.95, -0.8, -0.5, -0.2, 0.0, 0.2, 0.5, 0.8, 0.95, 0.999,
        ];
        let mut pts = Vec::new();
        for &s in &scales {
            for &c in &dirs {
                let sn = (1.0f64 - c * c).sqrt();
                pts.push(HalfPlanePoint::new(centre + s * c, s * sn));
            }
            for &a in &anchors {
                pts.push(HalfPlanePoint::new(a, s));
            }
        }
        pts.into_iter()
            .find(|&p| !matches!(self.signed_v(p), Ok(v) if v > 0.0))
    }
}

impl HalfPlaneField for AxiHarmonicPair {
    fn jet(&self, p: HalfPlanePoint, order: u8) -> Result<PairJet> {
        self.eval(p, order)
    }
}

/// The ALE (`ν = 0`) or Taub-NUT pair of a polygon:
///
/// `ξ = ν_d log r − ½ Σ_{i<d} (ν_{i+1} − ν_i) log(H − a_i + ρ_i) + ν H`,
///
/// so that `ξ ≈ ν_k log r` as `r → 0` on the boundary interval of facet k.
/// A nonzero ν must lie in the admissible cone; the V probe must agree.
pub fn make_pair(p: &DelzantPolytope, nu: TaubNutParameter) -> Result<AxiHarmonicPair> {
    let anchors: AnchorSequence = p.anchor_spacings();
    let n = p.normals();
    let d = p.d();
    let jumps = (0..d - 1)
        .map(|i| {
            let c = -0.5 * (n[i + 1] - n[i]);
            JumpTerm {
                coeff: [c.x, c.y],
                anchor: anchors.as_slice()[i],
            }
        })
        .collect();
    let mut pair = AxiHarmonicPair::new([n[d - 1].x, n[d - 1].y], jumps, nu.nu);
    let v1 = p.vertices()[0];
    pair.vertex_anchor = Some(VertexAnchor {
        anchor: anchors.as_slice()[0],
        vertex: [v1.x, v1.y],
    });
    if !nu.is_ale() {
        let nv = nu.vec();
        if !nu.nu.iter().all(|c| c.is_finite()) {
            return Err(SfkError::InadmissibleParameter(format!(
                "ν=({}, {}) is not finite",
                nu.nu[0], nu.nu[1]
            )));
        }
        let probe = pair.nonpositive_v_probe();
        let cone = in_admissible_cone(p, nv);
        match (cone, probe) {
            (true, None) => {}
            (_, Some(w)) => {
                return Err(SfkError::InadmissibleParameter(format!(
                    "V ≤ 0 at (H,r)=({}, {}) for ν=({}, {}); det(ν_1,ν)={}, det(ν_d,ν)={}",
                    w.h,
                    w.r,
                    nv.x,
                    nv.y,
                    det2(n[0], nv),
                    det2(n[d - 1], nv)
                )))
            }
            (false, None) => {
                return Err(SfkError::InadmissibleParameter(format!(
                    "ν=({}, {}) outside the cone det(ν_1,ν) > 0, det(ν_d,ν) > 0 \
                     (det(ν_1,ν)={}, det(ν_d,ν)={})",
                    nv.x,
                    nv.y,
                    det2(n[0], nv),
                    det2(n[d - 1], nv)
                )))
            }
        }
    }
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_branch_agrees_with_naive_form() {
        for &(h, r) in &[(-0.7, 0.9), (-2.0, 3.0), (0.3, 0.4), (-0.01, 0.5)] {
            let j = log_h_plus_rho(h, r);
            let naive = (h + h.hypot(r)).ln();
            assert!((j.v - naive).abs() < 1e-13, "{h} {r}");
        }
        // Far into the cancellation regime the naive form is useless.
        let j = log_h_plus_rho(-1.0, 1e-9);
        assert!((j.v - (1e-18f64.ln() - 2f64.ln())).abs() < 1e-10);
    }

    #[test]
    fn each_basis_function_is_harmonic() {
        for &(h, r) in &[(0.2, 0.3), (-3.0, 0.01), (5.0, 2.0), (0.0, 1.0)] {
            let f = log_h_plus_rho(h, r);
            assert!(f.laplace_residual(r).abs() < 1e-12 * (1.0 + f.d2[2].abs()));
            assert!(log_r_jet(r).laplace_residual(r).abs() < 1e-15);
        }
    }

    #[test]
    fn underflow_is_reported() {
        let pair = make_pair(&DelzantPolytope::quadrant(), TaubNutParameter::ale()).unwrap();
        let e = pair.eval(HalfPlanePoint { h: 1.0, r: 1e-170 }, 0);
        assert!(matches!(e, Err(SfkError::NumericalUnderflow { .. })));
    }
}
