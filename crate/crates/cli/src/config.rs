//! Input resolution and the configuration echo written beside every output.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sfk_core::harmonic::TaubNutParameter;
use sfk_core::numerics::Tolerances;
use sfk_core::polytope::{DelzantPolytope, PolytopeSpec};
use sfk_core::SfkError;

use crate::args::TolArgs;

/// Everything needed to reproduce one invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polytope: Option<PolytopeSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "serde_json::Map::is_empty", default)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl RunConfig {
    pub fn new(command: &str, tol: Tolerances, seed: u64) -> Self {
        Self {
            command: command.into(),
            polytope: None,
            nu: None,
            grid: None,
            tolerances: tol,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            extra: serde_json::Map::new(),
        }
    }

    pub fn with_extra(mut self, key: &str, value: impl Serialize) -> Self {
        self.extra
            .insert(key.into(), serde_json::to_value(value).expect("serialisable"));
        self
    }

    /// Writes `<output>.config.json`.
    pub fn write_beside(&self, output: &Path) -> anyhow::Result<PathBuf> {
        let path = echo_path(output);
        let json = serde_json::to_string_pretty(self)? + "\n";
        fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn echo_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

pub fn read_echo(output: &Path) -> anyhow::Result<RunConfig> {
    let path = echo_path(output);
    let text = fs::read_to_string(&path).map_err(SfkError::from)?;
    Ok(serde_json::from_str(&text).map_err(SfkError::from)?)
}

/// A polygon file path, or a built-in name when no such file exists.
pub fn load_polytope(arg: &str) -> anyhow::Result<DelzantPolytope> {
    let path = Path::new(arg);
    if !path.exists() {
        match arg {
            "quadrant" => return Ok(DelzantPolytope::quadrant()),
            "blowup" | "blow-up" | "blow_up" => return Ok(DelzantPolytope::blow_up()),
            _ => {}
        }
    }
    Ok(DelzantPolytope::from_path(path)?)
}

pub fn parse_nu(s: &str) -> anyhow::Result<TaubNutParameter> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("ale") || t == "0" {
        return Ok(TaubNutParameter::ale());
    }
    let parts: Vec<&str> = t.split(',').collect();
    let bad = || SfkError::InvalidInput(format!("--nu must be 'ale' or 'alpha,beta', got '{s}'"));
    if parts.len() != 2 {
        return Err(bad().into());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(bad().into());
    }
    Ok(TaubNutParameter::new(a, b))
}

pub fn tolerances(t: &TolArgs) -> anyhow::Result<Tolerances> {
    Tolerances::tightened(t.quad_tol, t.fd_tol, t.newton_tol)
        .map_err(|e| SfkError::InvalidInput(e.to_string()).into())
}

/// `lo:hi:n` pairs separated by a comma.
pub fn parse_lattice(s: &str) -> anyhow::Result<[(f64, f64, usize); 2]> {
    let bad = || SfkError::InvalidInput(format!("lattice must be 'x1min:x1max:n1,x2min:x2max:n2', got '{s}'"));
    let axes: Vec<&str> = s.split(',').collect();
    if axes.len() != 2 {
        return Err(bad().into());
    }
    let mut out = [(0.0, 0.0, 0); 2];
    for (o, a) in out.iter_mut().zip(axes) {
        let f: Vec<&str> = a.split(':').collect();
        if f.len() != 3 {
            return Err(bad().into());
        }
        let lo: f64 = f[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = f[1].trim().parse().map_err(|_| bad())?;
        let n: usize = f[2].trim().parse().map_err(|_| bad())?;
        if !(lo < hi) {
            return Err(bad().into());
        }
        *o = (lo, hi, n);
    }
    Ok(out)
}
