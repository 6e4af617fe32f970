//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use proptest::prelude::*;
use sfk_core::numerics::{det2, Vec2};
use sfk_core::polytope::DelzantPolytope;

/// Four facets; vertices (1,0), (0,1), (0,2).
pub fn d4() -> DelzantPolytope {
    DelzantPolytope::validate(
        "d4",
        vec![[0, 1], [1, 1], [1, 0], [1, -1]],
        vec![0.0, 1.0, 0.0, -2.0],
    )
    .expect("d4 is a valid polygon")
}

pub fn standard_polytopes() -> Vec<DelzantPolytope> {
    vec![DelzantPolytope::quadrant(), DelzantPolytope::blow_up(), d4()]
}

/// Lattice length of the bounded edge on facet `k` (0-based).
fn lattice_length(p: &DelzantPolytope, k: usize) -> f64 {
    let v = p.vertices();
    (v[k] - v[k - 1]).norm() / p.normal(k).norm()
}

/// Blows up vertex `i` (0-based) by cutting it with the facet normal
/// `ν_i + ν_{i+1}` at lattice depth `frac · (shortest adjacent bounded edge, capped at 1)`.
pub fn blow_up_vertex(p: &DelzantPolytope, i: usize, frac: f64) -> DelzantPolytope {
    let d = p.d();
    let mut reach: f64 = 1.0;
    if i > 0 {
        reach = reach.min(lattice_length(p, i));
    }
    if i + 1 < d - 1 {
        reach = reach.min(lattice_length(p, i + 1));
    }
    let ni = p.normals_int()[i];
    let nj = p.normals_int()[i + 1];
    let n = [ni[0] + nj[0], ni[1] + nj[1]];
    let v = p.vertices()[i];
    let lambda = n[0] as f64 * v.x + n[1] as f64 * v.y + frac * reach;
    let mut normals = p.normals_int().to_vec();
    let mut lambdas = p.lambdas().to_vec();
    normals.insert(i + 1, n);
    lambdas.insert(i + 1, lambda);
    DelzantPolytope::validate(format!("{}+", p.name()), normals, lambdas)
        .expect("blowing up a vertex keeps the polygon Delzant")
}

/// Random strictly unbounded Delzant polygons: iterated corner blow-ups of
/// the quadrant, then a translation.
pub fn arb_polytope() -> impl Strategy<Value = DelzantPolytope> {
    (
        prop::collection::vec((0.0f64..1.0, 0.2f64..0.8), 0..4),
        -3.0f64..3.0,
        -3.0f64..3.0,
    )
        .prop_map(|(cuts, sx, sy)| {
            let mut p = DelzantPolytope::quadrant();
            for (pick, frac) in cuts {
                let nv = p.vertices().len();
                let i = ((pick * nv as f64) as usize).min(nv - 1);
                p = blow_up_vertex(&p, i, frac);
            }
            p.translated(Vec2::new(sx, sy))
        })
}

/// `ν = a g₁ + b g₂` with the two generators of the admissible cone
/// `det(ν₁,ν) > 0, det(ν_d,ν) > 0`.
pub fn cone_point(p: &DelzantPolytope, a: f64, b: f64) -> Vec2 {
    let n1 = p.normal(0);
    let nd = p.normal(p.d() - 1);
    let s = det2(nd, n1).signum();
    a * s * n1 - b * s * nd
}
