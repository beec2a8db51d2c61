//! Monte-Carlo exit times.
//!
//! Every path draws its Gaussians from its own ChaCha8 stream, keyed by
//! `(seed, path_index)`, and normals come from the inverse CDF (one uniform
//! per variate). A path's result therefore does not depend on which thread
//! runs it or in which order, and aggregates are summed in path-index order.
//!
//! Exits are detected at grid times only: a path leaves at the first step
//! whose monitored radius is ≥ L.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mfet::ExitProblem;

/// Normal quantile for a two-sided 95% interval.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Euler–Maruyama on all d coordinates.
    FullEuler,
    /// Exact Gaussian OU transition on all d coordinates.
    FullExact,
    /// Euler on the radius ρ = ‖X‖.
    RadialEuler,
    /// Full-truncation Euler on ρ².
    SquaredRadialEuler,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::FullEuler,
        Scheme::FullExact,
        Scheme::RadialEuler,
        Scheme::SquaredRadialEuler,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::FullEuler => "full-euler",
            Scheme::FullExact => "full-exact",
            Scheme::RadialEuler => "radial-euler",
            Scheme::SquaredRadialEuler => "squared-radial-euler",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub scheme: Scheme,
    /// Paths still inside at this time are censored.
    pub t_max: f64,
}

impl McConfig {
    /// Config with the default horizon of 10⁶ steps.
    pub fn new(n_paths: usize, dt: f64, seed: u64, scheme: Scheme) -> Self {
        Self { n_paths, dt, seed, scheme, t_max: 1e6 * dt }
    }

    pub fn with_t_max(self, t_max: f64) -> Self {
        Self { t_max, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::domain("n_paths must be at least 1"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::domain(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max.is_finite() && self.t_max >= self.dt) {
            return Err(Error::domain(format!(
                "t_max must be finite and at least dt, got {}",
                self.t_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    /// Mean over exited paths only.
    pub mean: f64,
    pub std_err: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub n_exited: usize,
    pub n_censored: usize,
    pub dt: f64,
    pub scheme: Scheme,
}

/// A sampled radius trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub times: Vec<f64>,
    pub radii: Vec<f64>,
    pub exited_at: Option<f64>,
}

/// Standard normals from one counter-based stream.
struct Normals {
    rng: ChaCha8Rng,
}

impl Normals {
    fn for_path(seed: u64, path_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path_index);
        Self { rng }
    }

    #[inline]
    fn next(&mut self) -> f64 {
        // Uniform on the open interval (0, 1) from the top 53 bits.
        let u = ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * u)
    }
}

/// Runs one path, calling `observe(step, t, rho)` after every step (and once
/// for the initial state with step 0). Returns the exit time or `None` when
/// the horizon is reached first.
fn run_path<O>(p: &ExitProblem, cfg: &McConfig, path_index: usize, mut observe: O) -> Result<Option<f64>>
where
    O: FnMut(u64, f64, f64),
{
    cfg.validate()?;
    if path_index >= cfg.n_paths {
        return Err(Error::domain(format!(
            "path index {path_index} out of range for {} paths",
            cfg.n_paths
        )));
    }
    let params = p.params();
    let (theta, sigma, d) = (params.theta(), params.sigma(), params.d() as usize);
    let (radius, dt) = (p.radius(), cfg.dt);
    let sqrt_dt = dt.sqrt();

    observe(0, 0.0, p.start());
    if p.start() >= radius {
        return Ok(Some(0.0));
    }

    let mut normals = Normals::for_path(cfg.seed, path_index as u64);
    let mut step: u64 = 0;
    let mut advance = |rho: f64| -> Option<Option<f64>> {
        step += 1;
        let t = step as f64 * dt;
        observe(step, t, rho);
        if rho >= radius {
            Some(Some(t))
        } else if t >= cfg.t_max {
            Some(None)
        } else {
            None
        }
    };

    match cfg.scheme {
        Scheme::FullEuler | Scheme::FullExact => {
            // Spherical symmetry: only ‖X₀‖ matters, so start on the first axis.
            let mut x = vec![0.0; d];
            x[0] = p.start();
            let (decay, noise) = if cfg.scheme == Scheme::FullEuler {
                (1.0 - theta * dt, sigma * sqrt_dt)
            } else {
                (
                    (-theta * dt).exp(),
                    sigma * exact_variance_factor(theta, dt).sqrt(),
                )
            };
            loop {
                let mut norm_sq = 0.0;
                for xi in x.iter_mut() {
                    *xi = decay * *xi + noise * normals.next();
                    norm_sq += *xi * *xi;
                }
                if let Some(out) = advance(norm_sq.sqrt()) {
                    return Ok(out);
                }
            }
        }
        Scheme::SquaredRadialEuler => {
            let mut y = p.start() * p.start();
            loop {
                y = squared_radial_step(y, theta, sigma, d as f64, dt, sqrt_dt, normals.next());
                if let Some(out) = advance(y.max(0.0).sqrt()) {
                    return Ok(out);
                }
            }
        }
        Scheme::RadialEuler => {
            let dim = d as f64;
            let mut rho = p.start();
            loop {
                let z = normals.next();
                rho = if rho > 0.0 {
                    let drift = 0.5 * (dim - 1.0) * sigma * sigma / rho - theta * rho;
                    // |·| keeps the radius on the half-line, as for ‖X‖ itself.
                    (rho + drift * dt + sigma * sqrt_dt * z).abs()
                } else {
                    // The radial drift is singular at 0; step ρ² instead.
                    squared_radial_step(0.0, theta, sigma, dim, dt, sqrt_dt, z).max(0.0).sqrt()
                };
                if let Some(out) = advance(rho) {
                    return Ok(out);
                }
            }
        }
    }
}

/// (1 − e^{−2θΔt})/(2θ), continuous through θ = 0 where it is Δt.
fn exact_variance_factor(theta: f64, dt: f64) -> f64 {
    if theta == 0.0 {
        dt
    } else {
        -(-2.0 * theta * dt).exp_m1() / (2.0 * theta)
    }
}

#[inline]
fn squared_radial_step(y: f64, theta: f64, sigma: f64, d: f64, dt: f64, sqrt_dt: f64, z: f64) -> f64 {
    let pos = y.max(0.0);
    y + (sigma * sigma * d - 2.0 * theta * pos) * dt + 2.0 * sigma * pos.sqrt() * sqrt_dt * z
}

/// Exit time of path `path_index`, or `None` if it is still inside at `t_max`.
pub fn sample_exit_time(p: &ExitProblem, cfg: &McConfig, path_index: usize) -> Result<Option<f64>> {
    run_path(p, cfg, path_index, |_, _, _| {})
}

/// Keeps every `stride`-th sample of the radius, the start and the final
/// (crossing or censoring) sample.
pub fn record_path(p: &ExitProblem, cfg: &McConfig, path_index: usize, stride: usize) -> Result<PathRecord> {
    if stride == 0 {
        return Err(Error::domain("stride must be at least 1"));
    }
    let stride = stride as u64;
    let mut times = Vec::new();
    let mut radii = Vec::new();
    let mut last = (0, 0.0, 0.0);
    let exited_at = run_path(p, cfg, path_index, |step, t, rho| {
        if step % stride == 0 {
            times.push(t);
            radii.push(rho);
        }
        last = (step, t, rho);
    })?;
    let (step, t, rho) = last;
    if step % stride != 0 {
        times.push(t);
        radii.push(rho);
    }
    Ok(PathRecord { times, radii, exited_at })
}

/// Mean exit time over `cfg.n_paths` independent paths, run in parallel on
/// the current rayon pool.
pub fn estimate_mfet(p: &ExitProblem, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let outcomes = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| sample_exit_time(p, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    summarize(&outcomes, cfg)
}

fn summarize(outcomes: &[Option<f64>], cfg: &McConfig) -> Result<McEstimate> {
    let exited: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let n_censored = outcomes.len() - exited.len();
    if exited.is_empty() {
        return Err(Error::HorizonTooShort { n_censored });
    }
    let n = exited.len() as f64;
    let mean = neumaier_sum(exited.iter().copied()) / n;
    let std_err = if exited.len() > 1 {
        let ss = neumaier_sum(exited.iter().map(|t| (t - mean) * (t - mean)));
        (ss / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_err,
        ci95_low: mean - Z95 * std_err,
        ci95_high: mean + Z95 * std_err,
        n_exited: exited.len(),
        n_censored,
        dt: cfg.dt,
        scheme: cfg.scheme,
    })
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}
