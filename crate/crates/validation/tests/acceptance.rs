//! End-to-end acceptance checks. Prints one `PASS`/`FAIL` line per criterion
//! and exits non-zero if any criterion fails.
//!
//! Every tolerance below is fixed; none is derived from the computed values.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfk_core::correspondence::{build_chart, ForwardMap, GridSpec};
use sfk_core::harmonic::{
    make_pair, pde_residual, AxiHarmonicPair, HalfPlanePoint, TaubNutParameter,
};
use sfk_core::inverse::{closedness_residual, closedness_square_side, GuilleminSampler};
use sfk_core::numerics::{
    det2, fd_derivative, fit_power_law, Mat2, QuadratureOptions, Tolerances, Vec2,
};
use sfk_core::polytope::DelzantPolytope;
use sfk_core::verify::{
    asymptotic_deviations, sphere_integral, verify_asymptotic_hessian, verify_mu_difference,
    verify_parameter_recovery, verify_roundtrip, verify_scalar_flat, verify_scalar_flat_sampler,
    verify_sphere, verify_vertex_anchors, ASYMPTOTIC_H, ASYMPTOTIC_RADII, SPHERE_RADII,
};

type Check = Result<(bool, String), String>;

const SEED: u64 = 20240917;

fn d4() -> DelzantPolytope {
    DelzantPolytope::validate(
        "d4",
        vec![[0, 1], [1, 1], [1, 0], [1, -1]],
        vec![0.0, 1.0, 0.0, -2.0],
    )
    .expect("d4 is Delzant")
}

fn polytopes() -> Vec<DelzantPolytope> {
    vec![
        DelzantPolytope::quadrant(),
        DelzantPolytope::blow_up(),
        d4(),
    ]
}

/// `a g₁ + b g₂` for the two generators of the admissible cone.
fn cone_point(p: &DelzantPolytope, a: f64, b: f64) -> TaubNutParameter {
    let (n1, nd) = (p.normal(0), p.normal(p.d() - 1));
    let s = det2(nd, n1).signum();
    let v = a * s * n1 - b * s * nd;
    TaubNutParameter::new(v.x, v.y)
}

/// ALE plus three Taub-NUT parameters spread over the admissible cone.
fn parameters(p: &DelzantPolytope) -> Vec<TaubNutParameter> {
    vec![
        TaubNutParameter::ale(),
        cone_point(p, 1.0, 1.0),
        cone_point(p, 0.4, 1.6),
        cone_point(p, 1.6, 0.4),
    ]
}

fn forward(p: &DelzantPolytope, nu: TaubNutParameter) -> Result<ForwardMap, String> {
    ForwardMap::for_polytope(p, nu, &Tolerances::default()).map_err(err)
}

fn grid() -> GridSpec {
    "-2:2:9,0.5:3:6".parse().expect("grid literal")
}

fn nu_str(nu: TaubNutParameter) -> String {
    if nu.is_ale() {
        "ALE".into()
    } else {
        format!("({:.3},{:.3})", nu.vec().x, nu.vec().y)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// ------------------------------------------------------------------ AC1

fn ac1() -> Check {
    const TOL: f64 = 1e-8;
    let f = forward(&DelzantPolytope::quadrant(), TaubNutParameter::ale())?;
    let q0 = HalfPlanePoint::new(0.0, 2.0);
    let mut worst = (f.moment_map(q0).map_err(err)? - Vec2::new(1.0, 1.0)).norm();
    worst = worst.max((f.hessian_u(q0).map_err(err)? - Mat2::new(0.5, 0.0, 0.0, 0.5)).norm());
    // Forward direction on a 10×10 (H, r) grid.
    for i in 0..10 {
        for j in 0..10 {
            let q = HalfPlanePoint::new(-2.0 + 4.0 * i as f64 / 9.0, 0.3 + 2.7 * j as f64 / 9.0);
            let x = f.moment_map(q).map_err(err)?;
            worst = worst.max((x.y - x.x - q.h).abs());
            worst = worst.max((2.0 * (x.x * x.y).sqrt() - q.r).abs());
        }
    }
    // Inverse direction on a 10×10 x-grid.
    for i in 0..10 {
        for j in 0..10 {
            let x = Vec2::new(0.2 + 0.3 * i as f64, 0.2 + 0.3 * j as f64);
            let q = f.moment_map_inverse(x, None).map_err(err)?;
            worst = worst.max((q.h - (x.y - x.x)).abs());
            worst = worst.max((q.r - 2.0 * (x.x * x.y).sqrt()).abs());
        }
    }
    Ok((
        worst <= TOL,
        format!(
            "max deviation {worst:.3e} (tol {TOL:.0e}) over μ(0,2), Hess u(0,2), 2×100 grid nodes"
        ),
    ))
}

// ------------------------------------------------------------------ AC2

fn fd_laplace(pair: &AxiHarmonicPair, q: HalfPlanePoint) -> Result<[f64; 2], String> {
    let mut out = [0.0; 2];
    for (c, o) in out.iter_mut().enumerate() {
        let at = |h: f64, r: f64| {
            pair.eval(HalfPlanePoint::new(h, r), 0)
                .map(|j| j.value()[c])
                .unwrap_or(f64::NAN)
        };
        let step = 0.1 * q.r.min(1.0);
        let dom = Some((0.0, f64::INFINITY));
        let err = |e: sfk_core::numerics::FdError| e.to_string();
        let hh = fd_derivative(|t| at(t, q.r), q.h, 2, step, None)
            .map_err(err)?
            .value;
        let rr = fd_derivative(|t| at(q.h, t), q.r, 2, step, dom)
            .map_err(err)?
            .value;
        let r1 = fd_derivative(|t| at(q.h, t), q.r, 1, step, dom)
            .map_err(err)?
            .value;
        *o = hh + rr + r1 / q.r;
    }
    Ok(out)
}

fn ac2() -> Check {
    const ANALYTIC: f64 = 1e-12;
    const FD: f64 = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut an, mut fd, mut pairs) = (0.0f64, 0.0f64, 0);
    for p in polytopes() {
        for nu in parameters(&p) {
            let pair = make_pair(&p, nu).map_err(err)?;
            pairs += 1;
            for _ in 0..100 {
                let q = HalfPlanePoint::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.5..5.0));
                let a = pde_residual(&pair, q).map_err(err)?;
                an = an.max(a[0].abs()).max(a[1].abs());
                let n = fd_laplace(&pair, q)?;
                fd = fd.max(n[0].abs()).max(n[1].abs());
            }
        }
    }
    Ok((
        an <= ANALYTIC && fd <= FD,
        format!("{pairs} pairs × 100 points: analytic {an:.3e} (tol {ANALYTIC:.0e}), FD {fd:.3e} (tol {FD:.0e})"),
    ))
}

// ------------------------------------------------------------------ AC3

fn ac3() -> Check {
    const TOL: f64 = 1e-6;
    const CONTROL: f64 = 1e-2;
    let mut worst = 0.0f64;
    let mut charts = 0;
    let mut failing = Vec::new();
    for p in polytopes() {
        for nu in parameters(&p) {
            let chart = build_chart(&forward(&p, nu)?, &grid(), 0.2);
            let r = verify_scalar_flat(&chart, TOL);
            charts += 1;
            worst = worst.max(r.max_residual);
            if !r.pass {
                failing.push(format!("{} ν={}", p.name(), nu_str(nu)));
            }
        }
    }
    let g = GuilleminSampler::new(DelzantPolytope::blow_up());
    let pts: Vec<Vec2> = [[0.8, 0.8], [1.5, 0.6], [0.6, 1.5], [2.0, 2.0], [3.0, 1.0]]
        .iter()
        .map(|a| Vec2::new(a[0], a[1]))
        .collect();
    let control = verify_scalar_flat_sampler(&g, &pts, 0.2, TOL).max_residual;
    let ok = failing.is_empty() && control > CONTROL;
    let mut detail = format!(
        "{charts} charts: max |s| {worst:.3e} (tol {TOL:.0e}); Guillemin blow-up max |s| {control:.3e} (must exceed {CONTROL:.0e})"
    );
    if !failing.is_empty() {
        detail += &format!("; failing: {}", failing.join(", "));
    }
    Ok((ok, detail))
}

// ------------------------------------------------------------------ AC4

fn fd_hessian(f: &ForwardMap, x: Vec2, guess: HalfPlanePoint, h: f64) -> Result<Mat2, String> {
    let u = |y: Vec2| {
        f.moment_map_inverse(y, Some(guess))
            .and_then(|q| f.potential(q))
            .unwrap_or(f64::NAN)
    };
    let d2 = |dir: Vec2| {
        fd_derivative(|t| u(x + t * dir), 0.0, 2, h, None)
            .map(|d| d.value)
            .map_err(err)
    };
    let h11 = d2(Vec2::new(1.0, 0.0))?;
    let h22 = d2(Vec2::new(0.0, 1.0))?;
    let h12 = 0.5 * (d2(Vec2::new(1.0, 1.0))? - h11 - h22);
    Ok(Mat2::new(h11, h12, h12, h22))
}

fn ac4() -> Check {
    const REL: f64 = 1e-5;
    const DET: f64 = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let configs = [
        (DelzantPolytope::quadrant(), TaubNutParameter::ale()),
        (
            DelzantPolytope::blow_up(),
            cone_point(&DelzantPolytope::blow_up(), 1.0, 1.0),
        ),
        (d4(), cone_point(&d4(), 0.4, 1.6)),
    ];
    let (mut rel, mut det) = (0.0f64, 0.0f64);
    for (p, nu) in &configs {
        let f = forward(p, *nu)?;
        for _ in 0..50 {
            let q = HalfPlanePoint::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.5..3.0));
            let exact = f.hessian_u(q).map_err(err)?;
            det = det.max((exact.determinant() * q.r * q.r - 1.0).abs());
            let x = f.moment_map(q).map_err(err)?;
            let step = 0.2 * p.min_facet_value(x).min(1.0);
            let num = fd_hessian(&f, x, q, step)?;
            rel = rel.max((num - exact).norm() / exact.norm());
        }
    }
    Ok((
        rel <= REL && det <= DET,
        format!("3 charts × 50 points: FD relative {rel:.3e} (tol {REL:.0e}); |det·r² − 1| {det:.3e} (tol {DET:.0e})"),
    ))
}

// ------------------------------------------------------------------ AC5

fn ac5() -> Check {
    const TOL: f64 = 1e-6;
    let (mut vmax, mut gmax) = (0.0f64, 0.0f64);
    let mut lattice_max = 0.0f64;
    for p in [DelzantPolytope::blow_up(), d4()] {
        for nu in [TaubNutParameter::ale(), cone_point(&p, 1.0, 1.0)] {
            let f = forward(&p, nu)?;
            let a = f.pair().anchors();
            for (ai, v) in a.iter().zip(p.vertices()) {
                let x = f.boundary_limit(*ai).map_err(err)?;
                vmax = vmax.max((x - v).norm());
            }
            let two_pi = p.anchor_gaps_two_pi();
            let lengths = p.bounded_edge_lengths();
            for k in 0..a.len() - 1 {
                let gap = a[k + 1] - a[k];
                gmax = gmax.max((gap - two_pi[k]).abs());
                lattice_max = lattice_max.max((gap - lengths[k] / p.normal(k + 1).norm()).abs());
            }
            // The library suite checks the same two clauses.
            let suite = verify_vertex_anchors(&f);
            if suite.pass != (vmax <= TOL && gmax <= TOL) {
                return Err(format!("suite disagrees with direct check on {}", p.name()));
            }
        }
    }
    Ok((
        vmax <= TOL && gmax <= TOL,
        format!(
            "vertex limits {vmax:.3e} (tol {TOL:.0e}); gaps vs length/(2π|ν_i|²) {gmax:.3e} (tol {TOL:.0e}); \
             gaps vs length/|ν_(i+1)| {lattice_max:.3e}"
        ),
    ))
}

// ------------------------------------------------------------------ AC6

fn ac6() -> Check {
    let mut worst = 0.0f64;
    let mut failing = Vec::new();
    let mut runs = 0;
    for p in polytopes() {
        for nu in parameters(&p).into_iter().skip(1) {
            let r = verify_mu_difference(&p, nu, &Tolerances::default(), SEED);
            runs += 1;
            worst = worst.max(r.max_residual);
            if !r.pass {
                failing.push(format!(
                    "{} ν={}: {}",
                    p.name(),
                    nu_str(nu),
                    r.notes.join("; ")
                ));
            }
        }
    }
    let mut detail = format!("{runs} (polygon, ν) pairs × 50 points + Wright operator: max residual {worst:.3e} (tol 1e-9)");
    if !failing.is_empty() {
        detail += &format!("; failing: {}", failing.join(" | "));
    }
    Ok((failing.is_empty(), detail))
}

// ------------------------------------------------------------------ AC7

fn ac7() -> Check {
    const DEV: f64 = 5e-3;
    const ORDER: f64 = 0.2;
    const ALE: f64 = 1e-2;
    let (mut dev, mut order_err, mut ale) = (0.0f64, 0.0f64, 0.0f64);
    let mut suites_ok = true;
    for p in polytopes() {
        // Generic parameters: at isolated ν (e.g. (−1, 1) on the blow-up) the
        // 1/r coefficient cancels and the deviation decays like 1/r².
        for nu in [cone_point(&p, 0.4, 1.6), cone_point(&p, 1.6, 0.4)] {
            let f = forward(&p, nu)?;
            for h in ASYMPTOTIC_H {
                let e =
                    asymptotic_deviations(&f, &p, nu.vec(), h, &ASYMPTOTIC_RADII).map_err(err)?;
                dev = dev.max(e[1]);
                order_err = order_err.max((fit_power_law(&ASYMPTOTIC_RADII, &e).slope + 1.0).abs());
            }
            suites_ok &= verify_asymptotic_hessian(&f, nu).pass;
        }
        let fa = forward(&p, TaubNutParameter::ale())?;
        for h in ASYMPTOTIC_H {
            let n = fa
                .hessian_u(HalfPlanePoint::new(h, 1e4))
                .map_err(err)?
                .norm();
            ale = ale.max(n);
        }
        suites_ok &= verify_asymptotic_hessian(&fa, TaubNutParameter::ale()).pass;
    }
    Ok((
        dev <= DEV && order_err <= ORDER && ale <= ALE && suites_ok,
        format!(
            "deviation at r=1e3 {dev:.3e} (tol {DEV:.0e}); |order − 1| {order_err:.3e} (tol {ORDER}); \
             ALE ‖Hess u‖ at r=1e4 {ale:.3e} (tol {ALE:.0e})"
        ),
    ))
}

// ------------------------------------------------------------------ AC8

fn ac8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let polys = polytopes();
    let mut worst = 0.0f64;
    let mut failing = Vec::new();
    for k in 0..10 {
        let p = &polys[k % polys.len()];
        let nu = cone_point(p, rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0));
        let r = verify_parameter_recovery(&forward(p, nu)?, nu);
        worst = worst.max(r.max_residual);
        if !r.pass {
            failing.push(format!("{} ν={}", p.name(), nu_str(nu)));
        }
    }
    let mut ale_ok = 0;
    for p in &polys {
        let nu = TaubNutParameter::ale();
        if verify_parameter_recovery(&forward(p, nu)?, nu).pass {
            ale_ok += 1;
        } else {
            failing.push(format!("{} ALE", p.name()));
        }
    }
    let mut detail = format!(
        "10 random ν: max relative error {worst:.3e} (tol 1e-2); ALE classified on {ale_ok}/3"
    );
    if !failing.is_empty() {
        detail += &format!("; failing: {}", failing.join(", "));
    }
    Ok((failing.is_empty(), detail))
}

// ------------------------------------------------------------------ AC9

/// `|S³| · ∫₀^π sin α dα` by composite Simpson (the α-integrand of the
/// sphere integral reduces to `R² sin α`).
fn sphere_oracle() -> f64 {
    let n = 4000;
    let h = PI / n as f64;
    let mut s = 0.0f64.sin() + PI.sin();
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * (i as f64 * h).sin();
    }
    2.0 * PI * PI * s * h / 3.0
}

fn ac9() -> Check {
    const TOL: f64 = 1e-10;
    let opts = QuadratureOptions::with_tol(1e-12);
    let vals: Vec<f64> = SPHERE_RADII
        .iter()
        .map(|&r| sphere_integral(r, &opts).map(|v| v / (r * r)))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let c = vals[0];
    let spread = vals.iter().map(|v| ((v - c) / c).abs()).fold(0.0, f64::max);
    let oracle = sphere_oracle();
    let vs_oracle = ((c - oracle) / oracle).abs();
    let vs_4pi2 = ((c - 4.0 * PI * PI) / (4.0 * PI * PI)).abs();
    let suite = verify_sphere(&Tolerances::default()).pass;
    Ok((
        spread <= TOL && vs_oracle <= TOL && vs_4pi2 <= TOL && suite,
        format!(
            "value/R² = {c:.12} over R ∈ {SPHERE_RADII:?}: spread {spread:.3e}; vs Simpson oracle {oracle:.12}: \
             {vs_oracle:.3e}; vs 4π²: {vs_4pi2:.3e} (tol {TOL:.0e})"
        ),
    ))
}

// ------------------------------------------------------------------ AC10

fn ac10() -> Check {
    const CONTROL: f64 = 1e-3;
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    let mut ok = true;
    for (p, nu) in [
        (DelzantPolytope::quadrant(), TaubNutParameter::ale()),
        (
            DelzantPolytope::blow_up(),
            cone_point(&DelzantPolytope::blow_up(), 1.0, 1.0),
        ),
        (d4(), cone_point(&d4(), 0.4, 1.6)),
    ] {
        let r = verify_roundtrip(&forward(&p, nu)?, &grid(), &Tolerances::default());
        worst = worst.max(r.max_residual);
        ok &= r.pass;
        notes.push(format!("{}: {}", p.name(), r.notes[1..].join(", ")));
    }
    let g = GuilleminSampler::new(DelzantPolytope::blow_up());
    let opts = Tolerances::default().quadrature();
    let mut control = 0.0f64;
    for x in [[0.8, 0.8], [1.5, 0.6], [0.6, 1.5], [2.0, 2.0]] {
        let x = Vec2::new(x[0], x[1]);
        let side = closedness_square_side(&DelzantPolytope::blow_up(), x);
        let c = closedness_residual(&g, x, side, &opts).map_err(err)?;
        control = control.max(c.abs());
    }
    Ok((
        ok && control > CONTROL,
        format!(
            "max |(H,r) error| {worst:.3e} (tol 1e-5) [{}]; Guillemin blow-up closedness {control:.3e} (must exceed {CONTROL:.0e})",
            notes.join(" | ")
        ),
    ))
}

// ------------------------------------------------------------------ AC11

fn sfk_binary() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?;
    let bin = dir.join(format!("sfk{}", std::env::consts::EXE_SUFFIX));
    bin.exists().then_some(bin)
}

fn run(bin: &Path, dir: &Path, threads: &str, args: &[&str]) -> Result<(), String> {
    let out = Command::new(bin)
        .args(args)
        .current_dir(dir)
        .env("SFK_THREADS", threads)
        .output()
        .map_err(err)?;
    match out.status.code() {
        Some(0) => Ok(()),
        c => Err(format!(
            "sfk {} exited with {c:?}: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        )),
    }
}

fn ac11() -> Check {
    let bin = sfk_binary()
        .ok_or("sfk binary not found next to the test executable; build the workspace first")?;
    let dir = tempfile::tempdir().map_err(err)?;
    let files = [
        "chart.csv",
        "chart.csv.summary.txt",
        "chart.csv.config.json",
        "report.json",
        "report.json.config.json",
        "chart.svg",
        "potential.csv",
        "iso.csv",
    ];
    let mut snapshots = Vec::new();
    for threads in ["1", "4", "4"] {
        run(
            &bin,
            dir.path(),
            threads,
            &[
                "build",
                "--polytope",
                "blowup",
                "--nu",
                "-0.5,0.5",
                "--out",
                "chart.csv",
            ],
        )?;
        run(
            &bin,
            dir.path(),
            threads,
            &[
                "verify",
                "--polytope",
                "blowup",
                "--nu",
                "-0.5,0.5",
                "--suite",
                "sphere,mu_difference,boundary",
                "--report",
                "report.json",
            ],
        )?;
        run(
            &bin,
            dir.path(),
            threads,
            &["plot", "chart.csv", "--out", "chart.svg"],
        )?;
        run(
            &bin,
            dir.path(),
            threads,
            &[
                "potential",
                "--polytope",
                "quadrant",
                "--lattice",
                "0.5:2:7,0.5:2:7",
                "--out",
                "potential.csv",
            ],
        )?;
        run(
            &bin,
            dir.path(),
            threads,
            &["invert", "potential.csv", "--out", "iso.csv"],
        )?;
        let snap: Vec<Vec<u8>> = files
            .iter()
            .map(|f| std::fs::read(dir.path().join(f)).map_err(|e| format!("{f}: {e}")))
            .collect::<Result<_, _>>()?;
        snapshots.push(snap);
    }
    let differing: Vec<&str> = files
        .iter()
        .enumerate()
        .filter(|(i, _)| snapshots.iter().any(|s| s[*i] != snapshots[0][*i]))
        .map(|(_, f)| *f)
        .collect();
    Ok((
        differing.is_empty(),
        if differing.is_empty() {
            format!(
                "{} output files byte-identical across 3 runs (SFK_THREADS = 1, 4, 4)",
                files.len()
            )
        } else {
            format!("differing outputs: {}", differing.join(", "))
        },
    ))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Check); 11] = [
        ("AC1", "flat-model oracle", ac1),
        ("AC2", "axisymmetric PDE residual", ac2),
        ("AC3", "scalar-flatness", ac3),
        ("AC4", "Hessian factorization", ac4),
        ("AC5", "vertex anchors and spacing", ac5),
        ("AC6", "μ-difference identity", ac6),
        ("AC7", "asymptotic Hessian", ac7),
        ("AC8", "parameter recovery", ac8),
        ("AC9", "sphere integral", ac9),
        ("AC10", "roundtrip and closedness", ac10),
        ("AC11", "determinism", ac11),
    ];
    let mut failed = Vec::new();
    for (id, title, check) in criteria {
        let t = Instant::now();
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = t.elapsed().as_secs_f64();
        println!(
            "{id:<5} {} {title}: {detail} [{secs:.1}s]",
            if pass { "PASS" } else { "FAIL" }
        );
        if !pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 11 criteria pass");
    } else {
        println!(
            "acceptance: {} of 11 criteria fail: {}",
            failed.len(),
            failed.join(", ")
        );
        std::process::exit(1);
    }
}
