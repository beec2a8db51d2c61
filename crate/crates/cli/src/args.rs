use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oupexit::Scheme;
use serde::Serialize;

/// Largest dimension accepted without `--allow-huge-d`.
pub const MAX_DIMENSION: u32 = 1 << 20;

#[derive(Debug, Parser)]
#[command(name = "oupexit", version, about = "Mean exit times of the Ornstein-Uhlenbeck process from a ball")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Write results here instead of stdout; a manifest is written next to it.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Seed for the Monte-Carlo streams.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (affects speed only).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Accept d above 2^20.
    #[arg(long, global = true)]
    pub allow_huge_d: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact mean exit time, Brownian value, ratio and (for θ > 0) bounds.
    Mfet(ProblemArgs),
    /// Same as `mfet`, but θ > 0 is required.
    Bounds(ProblemArgs),
    /// Bounds, exact value and Monte-Carlo mean for d = d-min, 2·d-min, …, d-max.
    Scaling(ScalingArgs),
    /// Radius trajectories for θ and θ = 0 driven by the same noise.
    Trajectories(TrajectoryArgs),
    /// Drift ratio of the squared radius on a uniform ρ grid.
    DriftRatio(DriftRatioArgs),
    /// Run the built-in invariant checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub d: u32,
    /// Ball radius.
    #[arg(long = "L", allow_negative_numbers = true, value_name = "L")]
    pub l: f64,
    /// Start radius.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub x: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1e-10)]
    pub rel_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScalingPreset {
    /// L = 4, λ = 0.5, dt = 1e-3.
    Left,
    /// L = 3, λ = 0.7, dt = 1e-4.
    Right,
}

#[derive(Debug, Clone, Args)]
pub struct ScalingArgs {
    #[arg(long, value_enum, default_value_t = ScalingPreset::Left)]
    pub preset: ScalingPreset,
    #[arg(long, default_value_t = 2)]
    pub d_min: u32,
    #[arg(long, default_value_t = 256)]
    pub d_max: u32,
    #[arg(long = "L", allow_negative_numbers = true, value_name = "L")]
    pub l: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub paths: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    /// Censoring horizon (default: 10^6 steps or 100 exact mean exit times, whichever is longer).
    #[arg(long, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    #[arg(long, value_parser = parse_scheme, default_value = "squared-radial-euler")]
    pub scheme: Scheme,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1e-10)]
    pub rel_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', default_value = "2,10,1000")]
    pub d: Vec<u32>,
    #[arg(long = "L", allow_negative_numbers = true, value_name = "L", default_value_t = 2.5)]
    pub l: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub x: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.7)]
    pub theta: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1e-5)]
    pub dt: f64,
    /// Keep every stride-th step.
    #[arg(long, default_value_t = 100)]
    pub stride: usize,
    /// Censoring horizon (default as for `scaling`).
    #[arg(long, allow_negative_numbers = true)]
    pub t_max: Option<f64>,
    #[arg(long, value_parser = parse_scheme, default_value = "full-euler")]
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DriftPreset {
    /// ρ up to L.
    Left,
    /// ρ up to 10·L.
    Right,
}

#[derive(Debug, Clone, Args)]
pub struct DriftRatioArgs {
    #[arg(long, value_enum, default_value_t = DriftPreset::Left)]
    pub preset: DriftPreset,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.7)]
    pub theta: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long = "L", allow_negative_numbers = true, value_name = "L", default_value_t = 3.0)]
    pub l: f64,
    /// Overrides the preset's upper end of the ρ grid.
    #[arg(long, allow_negative_numbers = true)]
    pub rho_max: Option<f64>,
    /// Number of ρ samples, endpoints included.
    #[arg(long, default_value_t = 61)]
    pub points: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32,64,128")]
    pub d_list: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Perturb ln γ before the bracket check.
    Gamma,
}

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    /// Reduced grids.
    #[arg(long)]
    pub fast: bool,
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<Fault>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|_| {
        let names: Vec<_> = Scheme::ALL.iter().map(Scheme::name).collect();
        format!("expected one of {}", names.join(", "))
    })
}
