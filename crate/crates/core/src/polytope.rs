//! Strictly unbounded Delzant polygons.
//!
//! A polygon is the region `P = { x : l_i(x) > 0 }` with
//! `l_i(x) = x·ν_i − λ_i`, for primitive integer inward normals `ν_1 … ν_d`
//! listed counterclockwise along the boundary. Facets 1 and d carry the two
//! unbounded edges; consecutive normals satisfy `det(ν_i, ν_{i+1}) = −1`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{det2, quarter_turn, Mat2, Vec2};

/// A single violated invariant. Facet and vertex indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    TooFewFacets(usize),
    LengthMismatch { normals: usize, lambdas: usize },
    NonFiniteOffset(usize),
    NonPrimitiveNormal(usize),
    DelzantViolation(usize),
    ParallelUnboundedEdges,
    /// An unbounded edge direction is not a recession direction of `P`.
    NotUnbounded { edge_facet: usize, violated_facet: usize },
    /// The vertex of facets i, i+1 does not satisfy another facet inequality,
    /// i.e. the two facets do not actually share a vertex of `P`.
    VertexOutside { vertex: usize, facet: usize },
    EmptyInterior,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewFacets(d) => write!(f, "TooFewFacets({d})"),
            Violation::LengthMismatch { normals, lambdas } => {
                write!(f, "LengthMismatch({normals} normals, {lambdas} lambdas)")
            }
            Violation::NonFiniteOffset(i) => write!(f, "NonFiniteOffset({i})"),
            Violation::NonPrimitiveNormal(i) => write!(f, "NonPrimitiveNormal({i})"),
            Violation::DelzantViolation(i) => write!(f, "DelzantViolation({i})"),
            Violation::ParallelUnboundedEdges => write!(f, "ParallelUnboundedEdges"),
            Violation::NotUnbounded {
                edge_facet,
                violated_facet,
            } => write!(
                f,
                "NotUnbounded(edge on facet {edge_facet} leaves facet {violated_facet})"
            ),
            Violation::VertexOutside { vertex, facet } => {
                write!(f, "VertexOutside(vertex {vertex} violates facet {facet})")
            }
            Violation::EmptyInterior => write!(f, "EmptyInterior"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct PolytopeError {
    pub violations: Vec<Violation>,
}

impl PolytopeError {
    pub fn contains(&self, pred: impl Fn(&Violation) -> bool) -> bool {
        self.violations.iter().any(pred)
    }
}

impl fmt::Display for PolytopeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "invalid polygon: {}", parts.join(", "))
    }
}

/// On-disk representation: `{"name": …, "normals": [[a,b],…], "lambdas": […]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolytopeSpec {
    pub name: String,
    pub normals: Vec<[i64; 2]>,
    pub lambdas: Vec<f64>,
}

/// Increasing anchor parameters `a_1 = 0 < a_2 < … < a_{d−1}` on the H-axis.
///
/// The boundary point `(a_i, 0)` of the half-plane is sent to vertex `i` by
/// the moment map; facet 1 corresponds to `H < a_1`, facet `k+1` to
/// `a_k < H < a_{k+1}` and facet d to `H > a_{d−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSequence(Vec<f64>);

impl AnchorSequence {
    pub fn new(a: Vec<f64>) -> Option<Self> {
        let ok = !a.is_empty()
            && a.iter().all(|v| v.is_finite())
            && a.windows(2).all(|w| w[0] < w[1]);
        ok.then_some(Self(a))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// An H value in the middle of the boundary interval of facet `k`
    /// (0-based). Half-infinite intervals use a point at distance `reach`
    /// beyond the last anchor.
    pub fn facet_midpoint(&self, k: usize, reach: f64) -> f64 {
        let a = &self.0;
        if k == 0 {
            a[0] - reach
        } else if k >= a.len() {
            a[a.len() - 1] + reach
        } else {
            0.5 * (a[k - 1] + a[k])
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelzantPolytope {
    name: String,
    normals: Vec<[i64; 2]>,
    lambdas: Vec<f64>,
    vertices: Vec<Vec2>,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn as_vec(n: [i64; 2]) -> Vec2 {
    Vec2::new(n[0] as f64, n[1] as f64)
}

fn idet(a: [i64; 2], b: [i64; 2]) -> i64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Relative tolerance for "strictly inside" tests on vertices.
const VERTEX_SLACK: f64 = 1e-12;

impl DelzantPolytope {
    /// Checks every invariant and collects all violations.
    pub fn validate(
        name: impl Into<String>,
        normals: Vec<[i64; 2]>,
        lambdas: Vec<f64>,
    ) -> Result<Self, PolytopeError> {
        let fail = |v: Vec<Violation>| Err(PolytopeError { violations: v });
        if normals.len() != lambdas.len() {
            return fail(vec![Violation::LengthMismatch {
                normals: normals.len(),
                lambdas: lambdas.len(),
            }]);
        }
        let d = normals.len();
        if d < 2 {
            return fail(vec![Violation::TooFewFacets(d)]);
        }
        let mut v = Vec::new();
        for (i, l) in lambdas.iter().enumerate() {
            if !l.is_finite() {
                v.push(Violation::NonFiniteOffset(i + 1));
            }
        }
        for (i, n) in normals.iter().enumerate() {
            if gcd(n[0], n[1]) != 1 {
                v.push(Violation::NonPrimitiveNormal(i + 1));
            }
        }
        if idet(normals[0], normals[d - 1]) == 0 {
            v.push(Violation::ParallelUnboundedEdges);
        }
        for i in 0..d - 1 {
            if idet(normals[i], normals[i + 1]) != -1 {
                v.push(Violation::DelzantViolation(i + 1));
            }
        }
        if !v.is_empty() {
            return fail(v);
        }

        let nv: Vec<Vec2> = normals.iter().map(|&n| as_vec(n)).collect();
        let vertices: Vec<Vec2> = (0..d - 1)
            .map(|i| {
                // x·ν_i = λ_i, x·ν_{i+1} = λ_{i+1}
                let m = Mat2::new(nv[i].x, nv[i].y, nv[i + 1].x, nv[i + 1].y);
                let inv = m.try_inverse().expect("Delzant pair is unimodular");
                inv * Vec2::new(lambdas[i], lambdas[i + 1])
            })
            .collect();

        let (t1, td) = unbounded_directions_of(&nv);
        for (edge_facet, t) in [(1, t1), (d, td)] {
            for (j, n) in nv.iter().enumerate() {
                if t.dot(n) < 0.0 {
                    v.push(Violation::NotUnbounded {
                        edge_facet,
                        violated_facet: j + 1,
                    });
                }
            }
        }
        for (i, x) in vertices.iter().enumerate() {
            let scale = 1.0 + x.norm();
            for (j, n) in nv.iter().enumerate() {
                if j == i || j == i + 1 {
                    continue;
                }
                if x.dot(n) - lambdas[j] <= VERTEX_SLACK * scale * n.norm() {
                    v.push(Violation::VertexOutside {
                        vertex: i + 1,
                        facet: j + 1,
                    });
                }
            }
        }
        if !v.is_empty() {
            return fail(v);
        }
        let p = Self {
            name: name.into(),
            normals,
            lambdas,
            vertices,
        };
        let c = p.interior_point();
        if p.facet_values(c).iter().any(|&l| l <= 0.0) {
            return fail(vec![Violation::EmptyInterior]);
        }
        Ok(p)
    }

    pub fn from_spec(spec: PolytopeSpec) -> Result<Self, PolytopeError> {
        Self::validate(spec.name, spec.normals, spec.lambdas)
    }

    pub fn to_spec(&self) -> PolytopeSpec {
        PolytopeSpec {
            name: self.name.clone(),
            normals: self.normals.clone(),
            lambdas: self.lambdas.clone(),
        }
    }

    pub fn from_json_str(s: &str) -> crate::Result<Self> {
        let spec: PolytopeSpec = serde_json::from_str(s)?;
        Ok(Self::from_spec(spec)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> crate::Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// The standard quadrant `x₁, x₂ > 0`.
    pub fn quadrant() -> Self {
        Self::validate("quadrant", vec![[0, 1], [1, 0]], vec![0.0, 0.0]).expect("valid")
    }

    /// The quadrant with the corner cut off along `x₁ + x₂ = 1`.
    pub fn blow_up() -> Self {
        Self::validate("blowup", vec![[0, 1], [1, 1], [1, 0]], vec![0.0, 1.0, 0.0])
            .expect("valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of facets `d`.
    pub fn d(&self) -> usize {
        self.normals.len()
    }

    pub fn normals_int(&self) -> &[[i64; 2]] {
        &self.normals
    }

    pub fn normal(&self, i: usize) -> Vec2 {
        as_vec(self.normals[i])
    }

    pub fn normals(&self) -> Vec<Vec2> {
        self.normals.iter().map(|&n| as_vec(n)).collect()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// `vertex_i = facet_i ∩ facet_{i+1}`, `d − 1` of them.
    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    /// `l_i(x) = x·ν_i − λ_i` for every facet.
    pub fn facet_values(&self, x: Vec2) -> Vec<f64> {
        self.normals
            .iter()
            .zip(&self.lambdas)
            .map(|(&n, &l)| x.dot(&as_vec(n)) - l)
            .collect()
    }

    pub fn contains(&self, x: Vec2) -> bool {
        self.facet_values(x).iter().all(|&l| l > 0.0)
    }

    /// Smallest facet value at `x` (distance-like; negative outside).
    pub fn min_facet_value(&self, x: Vec2) -> f64 {
        self.facet_values(x)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// Directions of the unbounded edges on facets 1 and d.
    pub fn unbounded_directions(&self) -> (Vec2, Vec2) {
        unbounded_directions_of(&self.normals())
    }

    /// A canonical interior point: the vertex centroid pushed along the sum
    /// of the unbounded directions.
    pub fn interior_point(&self) -> Vec2 {
        let n = self.vertices.len() as f64;
        let c = self.vertices.iter().fold(Vec2::zeros(), |a, v| a + v) / n;
        let (t1, td) = self.unbounded_directions();
        let scale = 1.0
            + self
                .bounded_edge_lengths()
                .iter()
                .cloned()
                .fold(0.0, f64::max);
        c + 0.5 * scale * (t1.normalize() + td.normalize())
    }

    /// Euclidean lengths of the bounded edges `e_2 … e_{d−1}`; edge `e_k`
    /// lies on facet k between vertices k−1 and k.
    pub fn bounded_edge_lengths(&self) -> Vec<f64> {
        self.vertices
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .collect()
    }

    /// Anchor parameters with `a_1 = 0` and
    /// `a_{i+1} − a_i = length(e_{i+1}) / |ν_{i+1}|`.
    ///
    /// Along the boundary interval of facet k the moment map moves with
    /// speed `|ν_k|` in H, which fixes this spacing.
    pub fn anchor_spacings(&self) -> AnchorSequence {
        let mut a = vec![0.0];
        for (k, len) in self.bounded_edge_lengths().into_iter().enumerate() {
            let last = a[a.len() - 1];
            a.push(last + len / self.normal(k + 1).norm());
        }
        AnchorSequence::new(a).expect("edge lengths are positive")
    }

    /// Gaps under the alternative normalisation `length(e_{i+1}) / (2π|ν_i|²)`.
    ///
    /// Not used for construction; kept so the normalisation can be compared
    /// against the boundary limits of the moment map.
    pub fn anchor_gaps_two_pi(&self) -> Vec<f64> {
        self.bounded_edge_lengths()
            .into_iter()
            .enumerate()
            .map(|(i, len)| len / (2.0 * std::f64::consts::PI * self.normal(i).norm_squared()))
            .collect()
    }

    /// Translate the polygon by `shift` (`x ↦ x + shift`).
    pub fn translated(&self, shift: Vec2) -> Self {
        let lambdas = self
            .normals
            .iter()
            .zip(&self.lambdas)
            .map(|(&n, &l)| l + shift.dot(&as_vec(n)))
            .collect();
        Self::validate(self.name.clone(), self.normals.clone(), lambdas)
            .expect("translation preserves validity")
    }

    /// Integral affine change of coordinates making the polygon standard at
    /// vertex 1: the vertex moves to the origin and `ν_1, ν_2` become
    /// `(0,1), (1,0)`. Returns the new polygon and the integer matrix `A`
    /// with `x' = A (x − vertex_1)`.
    pub fn standardized(&self) -> (Self, [[i64; 2]; 2]) {
        let (n1, n2) = (self.normals[0], self.normals[1]);
        // N has columns ν_1, ν_2 and det N = −1, so N⁻¹ = −adj(N).
        let ninv = [[-n2[1], n2[0]], [n1[1], -n1[0]]];
        // B = A^{-T} = [[0,1],[1,0]] · N⁻¹
        let b = [ninv[1], ninv[0]];
        // A = B^{-T}; det B = 1 so B⁻¹ = adj(B).
        let binv = [[b[1][1], -b[0][1]], [-b[1][0], b[0][0]]];
        let a = [[binv[0][0], binv[1][0]], [binv[0][1], binv[1][1]]];
        let v1 = self.vertices[0];
        let normals: Vec<[i64; 2]> = self
            .normals
            .iter()
            .map(|n| {
                [
                    b[0][0] * n[0] + b[0][1] * n[1],
                    b[1][0] * n[0] + b[1][1] * n[1],
                ]
            })
            .collect();
        let lambdas = self
            .normals
            .iter()
            .zip(&self.lambdas)
            .map(|(&n, &l)| l - v1.dot(&as_vec(n)))
            .collect();
        let p = Self::validate(self.name.clone(), normals, lambdas)
            .expect("unimodular change preserves validity");
        (p, a)
    }
}

fn unbounded_directions_of(nv: &[Vec2]) -> (Vec2, Vec2) {
    let d = nv.len();
    (-quarter_turn(nv[0]), quarter_turn(nv[d - 1]))
}

/// `det(ν_1, ν) > 0` and `det(ν_d, ν) > 0`: the open cone of parameters ν
/// for which the Taub-NUT deformation stays positive on `P`.
pub fn in_admissible_cone(p: &DelzantPolytope, nu: Vec2) -> bool {
    det2(p.normal(0), nu) > 0.0 && det2(p.normal(p.d() - 1), nu) > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrant_is_valid() {
        let p = DelzantPolytope::quadrant();
        assert_eq!(p.vertices(), &[Vec2::new(0.0, 0.0)]);
        assert_eq!(p.anchor_spacings().as_slice(), &[0.0]);
        assert_eq!(p.facet_values(Vec2::new(0.0, 3.0)), vec![3.0, 0.0]);
    }

    #[test]
    fn gcd_detects_non_primitive() {
        assert_eq!(gcd(2, 4), 2);
        assert_eq!(gcd(0, 0), 0);
        assert_eq!(gcd(-3, 1), 1);
    }

    #[test]
    fn standardization_of_a_tilted_corner() {
        let p = DelzantPolytope::validate("t", vec![[1, 2], [1, 1]], vec![1.0, 0.5]).unwrap();
        let (s, a) = p.standardized();
        assert_eq!(s.normals_int(), &[[0, 1], [1, 0]]);
        assert!(s.vertices()[0].norm() < 1e-12);
        assert_eq!(a[0][0] * a[1][1] - a[0][1] * a[1][0], 1);
    }
}
