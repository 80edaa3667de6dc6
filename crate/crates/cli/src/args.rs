use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "revpath", version, about = "Optimal fluctuation paths and prehistory probabilities")]
pub struct Cli {
    /// Network file, or one of the built-in names `mono` and `bistable`.
    #[arg(long, global = true)]
    pub net: Option<String>,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Deterministic rate equation by RK4.
    Ode(OdeArgs),
    /// Exact jump paths (Gillespie direct method).
    Ssa(JumpArgs),
    /// Euler tau-leaping paths.
    Tauleap(JumpArgs),
    /// Chemical Langevin paths (Euler-Maruyama).
    Cle(JumpArgs),
    /// Non-stationary optimal path by shooting.
    Nop(NopArgs),
    /// Stationary optimal path into `--xT`.
    Op(OpArgs),
    /// Quasipotential on a grid.
    Quasipotential(QuasiArgs),
    /// Stationary law of the truncated master equation.
    Stationary(StationaryArgs),
    /// Prehistory probability field and its peak trajectory.
    Prehistory(PrehistoryArgs),
    /// Paths of the time-reversed jump process.
    ReversedSim(ReversedSimArgs),
    /// Gaussian covariance of the reversed process.
    Covariance(CovarianceArgs),
    /// Data behind one of the bundled figures.
    Figure(FigureArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Npp,
    Spp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureName {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

fn parse_floats(s: &str, want: usize) -> Result<Vec<f64>, String> {
    let parts: Result<Vec<f64>, _> = s.split(':').map(|p| p.trim().parse::<f64>()).collect();
    match parts {
        Ok(v) if v.len() == want && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(format!("expected {want} colon-separated numbers, got {s:?}")),
    }
}

fn parse_interval(s: &str) -> Result<Interval, String> {
    let v = parse_floats(s, 2)?;
    if v[0] >= v[1] {
        return Err(format!("empty interval {s:?}"));
    }
    Ok(Interval { lo: v[0], hi: v[1] })
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let v = parse_floats(s, 3)?;
    if v[0] > v[1] || v[2] <= 0.0 {
        return Err(format!("invalid grid {s:?}"));
    }
    Ok(GridSpec {
        lo: v[0],
        hi: v[1],
        step: v[2],
    })
}

#[derive(Debug, Args, Serialize)]
pub struct OdeArgs {
    /// Initial concentrations, one per species.
    #[arg(long, value_delimiter = ',', required = true)]
    pub x0: Vec<f64>,
    #[arg(long = "T")]
    pub t: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct JumpArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub x0: Vec<f64>,
    /// Volumes, comma separated.
    #[arg(long = "V", value_delimiter = ',', required = true)]
    pub volumes: Vec<f64>,
    #[arg(long = "T")]
    pub t: f64,
    /// Time step for tau-leaping and CLE; sampling step of ensemble summaries.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of paths; above 1 an ensemble summary is written as well.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Points of the ensemble-summary time grid.
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct NopArgs {
    #[arg(long)]
    pub x0: f64,
    #[arg(long = "xT")]
    pub x_t: f64,
    #[arg(long = "T")]
    pub t: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct OpArgs {
    #[arg(long = "xT")]
    pub x_t: f64,
    #[arg(long, default_value_t = 1.0)]
    pub xeq: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct QuasiArgs {
    #[arg(long, default_value_t = 1.0)]
    pub xeq: f64,
    /// `LO:HI:STEP`.
    #[arg(long, value_parser = parse_grid)]
    pub range: GridSpec,
}

#[derive(Debug, Args, Serialize)]
pub struct StationaryArgs {
    #[arg(long = "V", value_delimiter = ',', required = true)]
    pub volumes: Vec<f64>,
    /// `LO:HI`.
    #[arg(long, value_parser = parse_interval)]
    pub domain: Interval,
}

#[derive(Debug, Args, Serialize)]
pub struct LatticeArgs {
    #[arg(long, value_enum, default_value = "npp")]
    pub mode: Mode,
    #[arg(long = "V", value_delimiter = ',', required = true)]
    pub volumes: Vec<f64>,
    #[arg(long = "T")]
    pub t: f64,
    #[arg(long = "Nt", default_value_t = 1000)]
    pub nt: usize,
    /// Initial state; required for the non-stationary mode.
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long = "xT")]
    pub x_t: f64,
    /// Stable equilibrium used to size the domain.
    #[arg(long, default_value_t = 1.0)]
    pub xeq: f64,
    /// `LO:HI`; chosen from the quasipotential when absent.
    #[arg(long, value_parser = parse_interval)]
    pub domain: Option<Interval>,
}

#[derive(Debug, Args, Serialize)]
pub struct PrehistoryArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lattice: LatticeArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ReversedSimArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Points of the ensemble-summary time grid.
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct CovarianceArgs {
    #[arg(long, value_enum, default_value = "spp")]
    pub mode: Mode,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long = "xT")]
    pub x_t: f64,
    #[arg(long = "T")]
    pub t: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub name: FigureName,
    /// Overrides the bundled volume sweep.
    #[arg(long = "V", value_delimiter = ',')]
    pub volumes: Option<Vec<f64>>,
    #[arg(long = "Nt", default_value_t = 1000)]
    pub nt: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}
