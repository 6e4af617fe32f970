use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use sfk_core::correspondence::{build_chart, parse_chart_csv, ForwardMap, GridSpec};
use sfk_core::harmonic::TaubNutParameter;
use sfk_core::inverse::{invert_grid, isothermal_csv, GuilleminSampler, PairSampler, PotentialGrid, PotentialSampler};
use sfk_core::numerics::Vec2;
use sfk_core::polytope::DelzantPolytope;
use sfk_core::verify::{
    run_suites, verify_grid_flatness, verify_sphere, Suite, VerificationReport, VerifyConfig,
};
use sfk_core::SfkError;

use crate::args::{BuildArgs, InvertArgs, PlotArgs, PotentialArgs, PotentialKind, VerifyArgs};
use crate::config::{load_polytope, parse_lattice, parse_nu, read_echo, tolerances, RunConfig};
use crate::plot;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn fmt_nu(nu: TaubNutParameter) -> String {
    if nu.is_ale() {
        "ale (ν = 0)".into()
    } else {
        format!("({}, {})", nu.nu[0], nu.nu[1])
    }
}

pub fn build(args: &BuildArgs) -> anyhow::Result<Outcome> {
    let polytope = load_polytope(&args.model.polytope)?;
    let nu = parse_nu(&args.model.nu)?;
    let grid: GridSpec = args.grid.parse()?;
    let tol = tolerances(&args.tol)?;
    if !(args.step > 0.0 && args.step < 1.0) {
        return Err(SfkError::InvalidInput(format!("--step must lie in (0, 1), got {}", args.step)).into());
    }
    let fm = ForwardMap::for_polytope(&polytope, nu, &tol)?;
    let chart = build_chart(&fm, &grid, args.step);

    let summary_path = args.summary.clone().unwrap_or_else(|| with_suffix(&args.out, ".summary.txt"));
    write(&args.out, &chart.to_csv())?;

    let mut s = String::new();
    let _ = writeln!(s, "polytope      {}", polytope.name());
    let _ = writeln!(s, "normals       {:?}", polytope.normals_int());
    let _ = writeln!(s, "lambdas       {:?}", polytope.lambdas());
    let verts: Vec<[f64; 2]> = polytope.vertices().iter().map(|v| [v.x, v.y]).collect();
    let _ = writeln!(s, "vertices      {verts:?}");
    let _ = writeln!(s, "nu            {}", fmt_nu(nu));
    let _ = writeln!(s, "anchors       {:?}", fm.pair().anchors());
    let _ = writeln!(s, "grid          {grid} ({} nodes)", grid.len());
    let (smax, at) = chart.max_abs_scalar_curvature();
    match at {
        Some(i) => {
            let n = &chart.nodes[i];
            let _ = writeln!(s, "max |s_resid|  {smax:.3e} at (H,r)=({}, {})", n.h, n.r);
        }
        None => {
            let _ = writeln!(s, "max |s_resid|  n/a");
        }
    }
    let vmin = chart.nodes.iter().map(|n| n.v).fold(f64::INFINITY, f64::min);
    let _ = writeln!(s, "min V         {vmin:.6e}");
    let _ = writeln!(s, "violations    {}", chart.violations.len());
    for v in chart.violations.iter().take(10) {
        let _ = writeln!(s, "  node {} (H,r)=({}, {}): {}", v.index, v.h, v.r, v.what);
    }
    let _ = writeln!(s, "seed          {}", args.tol.seed);
    write(&summary_path, &s)?;
    print!("{s}");

    let mut cfg = RunConfig::new("build", tol, args.tol.seed).with_extra("step", args.step);
    cfg.polytope = Some(polytope.to_spec());
    cfg.nu = Some(nu.nu);
    cfg.grid = Some(grid.to_string());
    cfg.outputs = vec![args.out.clone(), summary_path];
    cfg.write_beside(&args.out)?;

    if let Some(v) = chart.violations.first() {
        return Err(anyhow::anyhow!(
            "{} node(s) failed; first at node {} (H,r)=({}, {}): {}",
            chart.violations.len(),
            v.index,
            v.h,
            v.r,
            v.what
        )
        .context(NumericalFailure));
    }
    Ok(Outcome::Pass)
}

/// Marker attached to errors that should map to the numerical exit code.
#[derive(Debug)]
pub struct NumericalFailure;

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("numerical failure")
    }
}

fn print_report(report: &VerificationReport) {
    for s in &report.suites {
        println!("{s}");
        for n in &s.notes {
            println!("    {n}");
        }
    }
    println!(
        "{} ({} of {} suites passed, seed {})",
        if report.all_pass() { "PASS" } else { "FAIL" },
        report.suites.iter().filter(|s| s.pass).count(),
        report.suites.len(),
        report.seed
    );
}

fn parse_suites(names: &[String]) -> anyhow::Result<Vec<Suite>> {
    let mut out = Vec::new();
    for n in names {
        if n.trim() == "all" {
            for s in Suite::ALL {
                if !out.contains(&s) {
                    out.push(s);
                }
            }
        } else {
            let s: Suite = n.parse()?;
            if !out.contains(&s) {
                out.push(s);
            }
        }
    }
    Ok(out)
}

pub fn verify(args: &VerifyArgs) -> anyhow::Result<Outcome> {
    let tol = tolerances(&args.tol)?;
    let polytope = args.polytope.as_deref().map(load_polytope).transpose()?;
    let nu = parse_nu(&args.nu)?;
    let mut cfg_echo = RunConfig::new("verify", tol, args.tol.seed);
    cfg_echo.polytope = polytope.as_ref().map(|p| p.to_spec());
    cfg_echo.outputs = vec![args.report.clone()];

    let report = if let Some(path) = &args.potential {
        if !args.suite.iter().all(|s| matches!(s.trim(), "flatness" | "all")) {
            return Err(SfkError::InvalidInput(
                "with --potential only the 'flatness' suite is available".into(),
            )
            .into());
        }
        let text = fs::read_to_string(path).map_err(SfkError::from)?;
        let grid = PotentialGrid::parse_csv(&text)?;
        let flat_tol = args.flat_tol.unwrap_or(1e-3);
        cfg_echo.inputs = vec![path.clone()];
        cfg_echo = cfg_echo.with_extra("flat_tol", flat_tol);
        VerificationReport {
            seed: args.tol.seed,
            suites: vec![verify_grid_flatness(&grid, polytope.as_ref(), 3, flat_tol)],
        }
    } else {
        let suites = parse_suites(&args.suite)?;
        match polytope {
            None if suites == [Suite::Sphere] => VerificationReport {
                seed: args.tol.seed,
                suites: vec![verify_sphere(&tol)],
            },
            None => {
                return Err(SfkError::InvalidInput(
                    "--polytope is required for every suite except 'sphere'".into(),
                )
                .into())
            }
            Some(p) => {
                let grid: GridSpec = args.grid.parse()?;
                let flat_tol = args.flat_tol.unwrap_or(1e-6);
                cfg_echo.nu = Some(nu.nu);
                cfg_echo.grid = Some(grid.to_string());
                cfg_echo = cfg_echo
                    .with_extra("suites", suites.iter().map(|s| s.name()).collect::<Vec<_>>())
                    .with_extra("flat_tol", flat_tol)
                    .with_extra("step", args.step);
                let cfg = VerifyConfig {
                    polytope: p,
                    nu,
                    tol,
                    grid,
                    seed: args.tol.seed,
                    curvature_step: args.step,
                    flat_tol,
                };
                run_suites(&cfg, &suites)?
            }
        }
    };
    print_report(&report);
    write(&args.report, &(report.to_json() + "\n"))?;
    cfg_echo.write_beside(&args.report)?;
    Ok(if report.all_pass() { Outcome::Pass } else { Outcome::Fail })
}

pub fn invert(args: &InvertArgs) -> anyhow::Result<Outcome> {
    let text = fs::read_to_string(&args.potential)
        .map_err(SfkError::from)
        .with_context(|| format!("reading {}", args.potential.display()))?;
    let grid = PotentialGrid::parse_csv(&text)?;
    let reference = args.polytope.as_deref().map(load_polytope).transpose()?;
    if let Some(p) = &reference {
        if let Some(k) = (0..grid.u.len()).find(|&k| {
            !p.contains(Vec2::new(grid.x1[k % grid.n1()], grid.x2[k / grid.n1()]))
        }) {
            return Err(SfkError::InvalidInput(format!(
                "lattice node ({}, {}) is not interior to the reference polygon",
                grid.x1[k % grid.n1()],
                grid.x2[k / grid.n1()]
            ))
            .into());
        }
    }
    let base = match &args.base {
        Some(b) => (b[0], b[1]),
        None => (grid.n1() / 2, grid.n2() / 2),
    };
    let nodes = invert_grid(&grid, reference.as_ref(), base, args.base_h)?;
    write(&args.out, &isothermal_csv(&nodes))?;

    let worst = nodes
        .iter()
        .max_by(|a, b| a.closedness_residual.abs().total_cmp(&b.closedness_residual.abs()))
        .expect("lattice is non-empty");
    println!(
        "inverted {}×{} lattice; base node ({}, {}) with H = {}; max |closedness residual| = {:.3e} at x=({}, {})",
        grid.n1(),
        grid.n2(),
        base.0,
        base.1,
        args.base_h,
        worst.closedness_residual.abs(),
        worst.x[0],
        worst.x[1]
    );
    if worst.closedness_residual.abs() > args.warn_closedness {
        eprintln!(
            "warning: closedness residual {:.3e} exceeds {:.1e}; the potential is not scalar-flat and H is path-dependent",
            worst.closedness_residual.abs(),
            args.warn_closedness
        );
    }
    let mut cfg = RunConfig::new("invert", Default::default(), 0)
        .with_extra("base", [base.0, base.1])
        .with_extra("base_h", args.base_h);
    cfg.polytope = reference.map(|p| p.to_spec());
    cfg.inputs = vec![args.potential.clone()];
    cfg.outputs = vec![args.out.clone()];
    cfg.write_beside(&args.out)?;
    Ok(Outcome::Pass)
}

pub fn plot(args: &PlotArgs) -> anyhow::Result<Outcome> {
    let text = fs::read_to_string(&args.chart).map_err(SfkError::from)?;
    let nodes = parse_chart_csv(&text)?;
    let polytope: Option<DelzantPolytope> = match &args.polytope {
        Some(p) => Some(load_polytope(p)?),
        None => match read_echo(&args.chart) {
            Ok(cfg) => cfg
                .polytope
                .map(DelzantPolytope::from_spec)
                .transpose()
                .map_err(SfkError::from)?,
            Err(_) => None,
        },
    };
    let svg = plot::render(&nodes, polytope.as_ref());
    write(&args.out, &svg)?;
    println!("wrote {} ({} nodes)", args.out.display(), nodes.len());
    let mut cfg = RunConfig::new("plot", Default::default(), 0);
    cfg.polytope = polytope.map(|p| p.to_spec());
    cfg.inputs = vec![args.chart.clone()];
    cfg.outputs = vec![args.out.clone()];
    cfg.write_beside(&args.out)?;
    Ok(Outcome::Pass)
}

pub fn potential(args: &PotentialArgs) -> anyhow::Result<Outcome> {
    let polytope = load_polytope(&args.model.polytope)?;
    let nu = parse_nu(&args.model.nu)?;
    let tol = tolerances(&args.tol)?;
    let [a1, a2] = parse_lattice(&args.lattice)?;
    for x1 in [a1.0, a1.1] {
        for x2 in [a2.0, a2.1] {
            if !polytope.contains(Vec2::new(x1, x2)) {
                return Err(SfkError::InvalidInput(format!(
                    "lattice corner ({x1}, {x2}) is not interior to the polygon"
                ))
                .into());
            }
        }
    }
    let sampler: Box<dyn PotentialSampler> = match args.kind {
        PotentialKind::Guillemin => Box::new(GuilleminSampler::new(polytope.clone())),
        PotentialKind::Metric => Box::new(PairSampler::new(ForwardMap::for_polytope(&polytope, nu, &tol)?)?),
    };
    let grid = PotentialGrid::sample(sampler.as_ref(), a1, a2)?;
    write(&args.out, &grid.to_csv())?;
    println!("wrote {} ({}×{} lattice)", args.out.display(), grid.n1(), grid.n2());
    let mut cfg = RunConfig::new("potential", tol, args.tol.seed)
        .with_extra("kind", format!("{:?}", args.kind).to_lowercase())
        .with_extra("lattice", &args.lattice);
    cfg.polytope = Some(polytope.to_spec());
    cfg.nu = Some(nu.nu);
    cfg.outputs = vec![args.out.clone()];
    cfg.write_beside(&args.out)?;
    Ok(Outcome::Pass)
}
