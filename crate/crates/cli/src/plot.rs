//! Deterministic SVG rendering of a chart: polygon, images of the (H, r)
//! grid lines under μ, and the vertex anchors.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sfk_core::correspondence::ChartNode;
use sfk_core::numerics::Vec2;
use sfk_core::polytope::DelzantPolytope;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 40.0;

struct Frame {
    lo: Vec2,
    scale: f64,
}

impl Frame {
    fn map(&self, p: Vec2) -> (f64, f64) {
        let x = MARGIN + (p.x - self.lo.x) * self.scale;
        let y = SIZE - MARGIN - (p.y - self.lo.y) * self.scale;
        (x, y)
    }
}

/// Sutherland–Hodgman clip of a convex polygon by `n·x ≥ λ`.
fn clip(poly: &[Vec2], n: Vec2, lambda: f64) -> Vec<Vec2> {
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (fa, fb) = (n.dot(&a) - lambda, n.dot(&b) - lambda);
        if fa >= 0.0 {
            out.push(a);
        }
        if (fa >= 0.0) != (fb >= 0.0) {
            out.push(a + (b - a) * (fa / (fa - fb)));
        }
    }
    out
}

fn key(v: f64) -> i64 {
    // Grid coordinates are parsed from CSV with 17 significant digits; a
    // fixed quantum groups the nodes of one grid line exactly.
    (v * 1e9).round() as i64
}

fn polyline(out: &mut String, frame: &Frame, pts: &[Vec2], class: &str) {
    if pts.len() < 2 {
        return;
    }
    let coords: Vec<String> = pts
        .iter()
        .map(|&p| {
            let (x, y) = frame.map(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(out, r#"<polyline class="{class}" points="{}"/>"#, coords.join(" "));
}

pub fn render(nodes: &[ChartNode], polytope: Option<&DelzantPolytope>) -> String {
    let mut pts: Vec<Vec2> = nodes.iter().map(|n| Vec2::new(n.x[0], n.x[1])).collect();
    if let Some(p) = polytope {
        pts.extend_from_slice(p.vertices());
    }
    let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
    for p in &pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    if pts.is_empty() {
        lo = Vec2::zeros();
        hi = Vec2::repeat(1.0);
    }
    let span = (hi - lo).max().max(1e-9);
    lo -= Vec2::repeat(0.05 * span);
    hi += Vec2::repeat(0.05 * span);
    let span = (hi - lo).max();
    let frame = Frame { lo, scale: (SIZE - 2.0 * MARGIN) / span };
    let top = lo + Vec2::repeat(span);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    s.push_str(
        "<style>\
         .poly{fill:#f2f2f2;stroke:none}\
         .facet{stroke:#000;stroke-width:2;fill:none}\
         .hline{stroke:#1f5fbf;stroke-width:1;fill:none}\
         .rline{stroke:#c0392b;stroke-width:1;fill:none}\
         .anchor{fill:#000}\
         text{font-family:sans-serif;font-size:12px}\
         </style>\n",
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>"#);

    if let Some(p) = polytope {
        let mut region = vec![lo, Vec2::new(top.x, lo.y), top, Vec2::new(lo.x, top.y)];
        for (n, &l) in p.normals().into_iter().zip(p.lambdas()) {
            region = clip(&region, n, l);
        }
        if region.len() >= 3 {
            let coords: Vec<String> = region
                .iter()
                .map(|&q| {
                    let (x, y) = frame.map(q);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(s, r#"<polygon class="poly" points="{}"/>"#, coords.join(" "));
            for k in 0..region.len() {
                let (a, b) = (region[k], region[(k + 1) % region.len()]);
                let mid = 0.5 * (a + b);
                let on_facet = p
                    .facet_values(mid)
                    .iter()
                    .any(|v| v.abs() <= 1e-9 * (1.0 + span));
                if on_facet {
                    polyline(&mut s, &frame, &[a, b], "facet");
                }
            }
        }
    }

    let mut by_h: BTreeMap<i64, Vec<(f64, Vec2)>> = BTreeMap::new();
    let mut by_r: BTreeMap<i64, Vec<(f64, Vec2)>> = BTreeMap::new();
    for n in nodes {
        let x = Vec2::new(n.x[0], n.x[1]);
        by_h.entry(key(n.h)).or_default().push((n.r, x));
        by_r.entry(key(n.r)).or_default().push((n.h, x));
    }
    for (map, class) in [(&mut by_h, "hline"), (&mut by_r, "rline")] {
        for line in map.values_mut() {
            line.sort_by(|a, b| a.0.total_cmp(&b.0));
            let pts: Vec<Vec2> = line.iter().map(|e| e.1).collect();
            polyline(&mut s, &frame, &pts, class);
        }
    }

    if let Some(p) = polytope {
        for (i, v) in p.vertices().iter().enumerate() {
            let (x, y) = frame.map(*v);
            let _ = writeln!(s, r#"<circle class="anchor" cx="{x:.2}" cy="{y:.2}" r="4"/>"#);
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}">v{} ({}, {})</text>"#,
                x + 6.0,
                y - 6.0,
                i + 1,
                v.x,
                v.y
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{:.2}">blue: H = const, red: r = const</text>"#,
        SIZE - 12.0
    );
    s.push_str("</svg>\n");
    s
}
