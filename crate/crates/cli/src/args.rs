use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "sfk", version)]
#[command(about = "Scalar-flat toric Kähler metrics: charts, verification, inversion and plots")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate the forward construction on an (H, r) grid and write a chart CSV.
    Build(BuildArgs),
    /// Run verification suites and write a JSON report.
    Verify(VerifyArgs),
    /// Recover isothermal coordinates (H, r) from a potential lattice CSV.
    Invert(InvertArgs),
    /// Draw a chart CSV as an SVG figure.
    Plot(PlotArgs),
    /// Tabulate a symplectic potential on an x-lattice (`x1,x2,u` CSV).
    Potential(PotentialArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Polygon JSON file, or one of the built-ins `quadrant`, `blowup`.
    #[arg(long)]
    pub polytope: String,

    /// Taub-NUT parameter `alpha,beta`, or `ale` for ν = 0.
    #[arg(long, default_value = "ale", allow_hyphen_values = true)]
    pub nu: String,
}

#[derive(Args, Debug, Clone)]
pub struct TolArgs {
    /// Absolute quadrature tolerance (may only be tightened).
    #[arg(long)]
    pub quad_tol: Option<f64>,

    /// Relative finite-difference tolerance (may only be tightened).
    #[arg(long)]
    pub fd_tol: Option<f64>,

    /// Absolute Newton tolerance (may only be tightened).
    #[arg(long)]
    pub newton_tol: Option<f64>,

    /// Seed for randomised sampling; recorded in every output.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Grid `Hmin:Hmax:nH,rmin:rmax:nr`.
    #[arg(long, allow_hyphen_values = true, default_value = "-4:4:17,0.5:4:8")]
    pub grid: String,

    /// Chart CSV output path.
    #[arg(long, short, default_value = "chart.csv")]
    pub out: PathBuf,

    /// Summary text output path [default: <out>.summary.txt].
    #[arg(long)]
    pub summary: Option<PathBuf>,

    /// Initial relative step of the scalar-curvature stencil.
    #[arg(long, default_value_t = sfk_core::correspondence::DEFAULT_CURVATURE_STEP)]
    pub step: f64,

    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PotentialKind {
    /// `u_P = ½ Σ (l_i log l_i − l_i)`.
    Guillemin,
    /// The potential of the constructed metric for `--nu`.
    Metric,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Polygon JSON file or built-in name (not needed for `--suite sphere`).
    #[arg(long)]
    pub polytope: Option<String>,

    /// Taub-NUT parameter `alpha,beta`, or `ale`.
    #[arg(long, default_value = "ale", allow_hyphen_values = true)]
    pub nu: String,

    /// Suites to run: `all` or a comma-separated list of
    /// scalar_flat, boundary, vertex_anchors, mu_difference,
    /// asymptotic_hessian, parameter_recovery, sphere, roundtrip.
    /// With `--potential`, `flatness` checks the lattice instead.
    #[arg(long, default_value = "all", value_delimiter = ',')]
    pub suite: Vec<String>,

    /// Grid used by the chart-based suites.
    #[arg(long, allow_hyphen_values = true, default_value = "-2:2:9,0.5:3:6")]
    pub grid: String,

    /// Potential lattice CSV (`x1,x2,u`) for the `flatness` suite.
    #[arg(long)]
    pub potential: Option<PathBuf>,

    /// Tolerance of the scalar-flatness suites [default: 1e-6 for charts,
    /// 1e-3 for potential lattices].
    #[arg(long)]
    pub flat_tol: Option<f64>,

    /// Report JSON output path.
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,

    #[arg(long, default_value_t = sfk_core::correspondence::DEFAULT_CURVATURE_STEP)]
    pub step: f64,

    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Args, Debug)]
pub struct InvertArgs {
    /// Potential lattice CSV with header `x1,x2,u`.
    pub potential: PathBuf,

    /// Isothermal CSV output path.
    #[arg(long, short, default_value = "isothermal.csv")]
    pub out: PathBuf,

    /// Reference polygon: difference only `u − u_P` (recommended whenever
    /// the lattice is a potential on a known polygon).
    #[arg(long)]
    pub polytope: Option<String>,

    /// Lattice node `i1,i2` where H is pinned [default: node nearest the centre].
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub base: Option<Vec<usize>>,

    /// Value of H at the base node.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub base_h: f64,

    /// Closedness residual above which a warning is printed.
    #[arg(long, default_value_t = 1e-3)]
    pub warn_closedness: f64,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    /// Chart CSV written by `sfk build`.
    pub chart: PathBuf,

    /// SVG output path.
    #[arg(long, short, default_value = "chart.svg")]
    pub out: PathBuf,

    /// Polygon to draw [default: read from `<chart>.config.json`].
    #[arg(long)]
    pub polytope: Option<String>,
}

#[derive(Args, Debug)]
pub struct PotentialArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long, value_enum, default_value_t = PotentialKind::Guillemin)]
    pub kind: PotentialKind,

    /// Lattice `x1min:x1max:n1,x2min:x2max:n2`.
    #[arg(long, allow_hyphen_values = true)]
    pub lattice: String,

    /// Potential CSV output path.
    #[arg(long, short, default_value = "potential.csv")]
    pub out: PathBuf,

    #[command(flatten)]
    pub tol: TolArgs,
}
