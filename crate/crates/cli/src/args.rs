use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use plate_hom::fem3d::{ElementKind, PreconditionerKind, SolverOptions};
use plate_hom::{Edge, Orientation};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "plate-hom", version, about = "Homogenized plate energies of periodic 3D composites")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Homogenized plate form of one cell at one gamma.
    Homogenize(HomogenizeArgs),
    /// Forms over a gamma range, with extrapolated limits.
    GammaSweep(GammaSweepArgs),
    /// Minimizes the limit plate energy.
    PlateSolve(PlateSolveArgs),
    /// 3D thin-plate energies against the limit plate over decreasing h.
    Theorem1(Theorem1Args),
    /// Mean / rotation / residual split of a displacement field.
    Griso(GrisoArgs),
    /// Forms of several microstructures at a fixed volume fraction.
    GclosureSample(GclosureArgs),
    /// Builds a patchwork plate and checks windowed recovery.
    Patchwork(PatchworkArgs),
    /// Writes a generated or adjusted microstructure.
    GenMicro(GenMicroArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Homogenize(_) => "homogenize",
            Command::GammaSweep(_) => "gamma-sweep",
            Command::PlateSolve(_) => "plate-solve",
            Command::Theorem1(_) => "theorem1",
            Command::Griso(_) => "griso",
            Command::GclosureSample(_) => "gclosure-sample",
            Command::Patchwork(_) => "patchwork",
            Command::GenMicro(_) => "gen-micro",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Homogenize(a) => &a.common,
            Command::GammaSweep(a) => &a.common,
            Command::PlateSolve(a) => &a.common,
            Command::Theorem1(a) => &a.common,
            Command::Griso(a) => &a.common,
            Command::GclosureSample(a) => &a.common,
            Command::Patchwork(a) => &a.common,
            Command::GenMicro(a) => &a.common,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// TOML file whose keys mirror the flags; explicit flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Exit with status 3 when the command's property checks fail.
    #[arg(long)]
    pub check: bool,
    /// Single-threaded run for bit-reproducible artifacts.
    #[arg(long)]
    pub deterministic: bool,
    /// Relative residual target of the linear solves.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Defaults to jacobi, or block-jacobi for theorem1.
    #[arg(long, value_enum)]
    pub preconditioner: Option<Precond>,
}

impl Common {
    pub fn solver(&self, default: PreconditionerKind) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            preconditioner: self.preconditioner.map_or(default, Into::into),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precond {
    Jacobi,
    BlockJacobi,
}

impl From<Precond> for PreconditionerKind {
    fn from(p: Precond) -> Self {
        match p {
            Precond::Jacobi => PreconditionerKind::Jacobi,
            Precond::BlockJacobi => PreconditionerKind::BlockJacobi,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Element {
    Trilinear,
    IncompatibleModes,
}

impl From<Element> for ElementKind {
    fn from(e: Element) -> Self {
        match e {
            Element::Trilinear => ElementKind::Trilinear,
            Element::IncompatibleModes => ElementKind::IncompatibleModes,
        }
    }
}

/// `a:b:n` (n log-spaced values, inclusive) or a comma list.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum GammaList {
    LogSpaced { from: f64, to: f64, count: usize },
    Values(Vec<f64>),
}

impl FromStr for GammaList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number '{t}': {e}"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [a, b, n] => Ok(GammaList::LogSpaced {
                from: num(a)?,
                to: num(b)?,
                count: n.trim().parse().map_err(|e| format!("bad count '{n}': {e}"))?,
            }),
            [list] => Ok(GammaList::Values(list.split(',').map(num).collect::<Result<_, _>>()?)),
            _ => Err(format!("expected a:b:n or a comma list, got '{s}'")),
        }
    }
}

impl GammaList {
    pub fn values(&self) -> plate_hom::Result<Vec<f64>> {
        match self {
            GammaList::LogSpaced { from, to, count } => plate_hom::cell::log_spaced(*from, *to, *count),
            GammaList::Values(v) => Ok(v.clone()),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct HomogenizeArgs {
    /// Cell microstructure JSON.
    #[arg(long)]
    pub micro: PathBuf,
    /// Phase library JSON.
    #[arg(long)]
    pub phases: PathBuf,
    #[arg(long)]
    pub gamma: f64,
    /// Accept phases that are not coercive.
    #[arg(long)]
    pub allow_soft: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct GammaSweepArgs {
    #[arg(long)]
    pub micro: PathBuf,
    #[arg(long)]
    pub phases: PathBuf,
    #[arg(long, default_value = "0.01:100:13")]
    pub gammas: GammaList,
    #[arg(long)]
    pub allow_soft: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct PlateSolveArgs {
    /// Plate problem JSON; form file references resolve against its directory.
    #[arg(long)]
    pub problem: PathBuf,
    /// Coefficient perturbations for the stability report.
    #[arg(long, value_delimiter = ',')]
    pub eta: Vec<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct Theorem1Args {
    /// Phase library JSON; phase 0 fills the plate unless `--layers` is given.
    #[arg(long)]
    pub phases: PathBuf,
    /// Phase id per voxel layer, bottom first.
    #[arg(long, value_delimiter = ',')]
    pub layers: Vec<u32>,
    /// Decreasing thicknesses.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.125,0.0625")]
    pub h: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,0,1", allow_hyphen_values = true)]
    pub force: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "left")]
    pub clamped: Vec<Edge>,
    /// In-plane cells of the 3D and plate grids.
    #[arg(long, value_delimiter = ',', default_value = "32,32")]
    pub resolution: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    pub nz: usize,
    #[arg(long, value_enum, default_value_t = Element::IncompatibleModes)]
    pub element: Element,
    /// Limit form JSON overriding the computed one.
    #[arg(long)]
    pub limit_form: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub gap_threshold: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct GrisoArgs {
    /// Nodal displacement field in VTK structured-points format.
    #[arg(long)]
    pub field: PathBuf,
    /// Thickness used by the Korn ratio.
    #[arg(long)]
    pub h: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct GclosureArgs {
    #[arg(long)]
    pub phases: PathBuf,
    /// Target volume fractions.
    #[arg(long, value_delimiter = ',')]
    pub theta: Vec<f64>,
    /// JSON list of generators.
    #[arg(long)]
    pub generators: PathBuf,
    #[arg(long, default_value = "1")]
    pub gammas: GammaList,
    #[arg(long, value_delimiter = ',', default_value = "8,8,8")]
    pub resolution: Vec<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct PatchworkArgs {
    /// Patchwork spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub phases: PathBuf,
    /// Largest window gap accepted by `--check`.
    #[arg(long, default_value_t = 0.05)]
    pub max_gap: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MicroKind {
    Laminate,
    Checkerboard,
    Random,
    Uniform,
    /// Rebalances `--input` to `--fractions`.
    Adjust,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainArg {
    Cell,
    Plate,
}

impl From<DomainArg> for plate_hom::Domain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Cell => plate_hom::Domain::Cell,
            DomainArg::Plate => plate_hom::Domain::Plate,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenMicroArgs {
    #[arg(long, value_enum)]
    pub kind: MicroKind,
    #[arg(long, value_delimiter = ',', default_value = "8,8,8")]
    pub dims: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub fractions: Vec<f64>,
    /// x1, x2, x3 or an in-plane angle in degrees.
    #[arg(long, default_value = "x3")]
    pub orientation: Orientation,
    #[arg(long, default_value_t = 2)]
    pub period: usize,
    #[arg(long, default_value_t = 2)]
    pub nphases: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub phase: u32,
    /// Grid to adjust.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Overrides the domain of the written grid.
    #[arg(long, value_enum)]
    pub domain: Option<DomainArg>,
    #[command(flatten)]
    pub common: Common,
}
