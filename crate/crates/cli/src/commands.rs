use std::fmt;

use anyhow::Result;
use oupexit::{
    drift_ratio, estimate_mfet, mfet_bm, mfet_bounds, mfet_exact, record_path, ExitProblem, McConfig,
    OupParams, QuadConfig, Regime, Scheme,
};
use serde::{Deserialize, Serialize};

use crate::args::{
    DriftPreset, DriftRatioArgs, ProblemArgs, ScalingArgs, ScalingPreset, TrajectoryArgs, MAX_DIMENSION,
};
use crate::output::Sink;

/// Bad flag values; reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn check_dimension(d: u32, allow_huge: bool) -> Result<()> {
    if d == 0 {
        return Err(usage("d must be at least 1"));
    }
    if d > MAX_DIMENSION && !allow_huge {
        return Err(usage(format!("d = {d} exceeds 2^20; pass --allow-huge-d to run it anyway")));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MfetRecord {
    pub d: u32,
    #[serde(rename = "L")]
    pub l: f64,
    pub x: f64,
    pub sigma: f64,
    pub theta: f64,
    pub lambda: f64,
    pub regime: String,
    pub mfet_exact: f64,
    pub mfet_bm: f64,
    /// Undefined when x = L.
    pub ratio: Option<f64>,
    pub lower_bm: Option<f64>,
    pub lower_exp: Option<f64>,
    pub upper_mixed: Option<f64>,
    pub upper_exp: Option<f64>,
}

pub fn mfet(args: &ProblemArgs, require_drift: bool, allow_huge: bool, sink: &mut Sink) -> Result<()> {
    check_dimension(args.d, allow_huge)?;
    let params = OupParams::new(args.theta, args.sigma, args.d)?;
    if require_drift && params.regime() != Regime::MeanReverting {
        return Err(usage(format!("bounds need theta > 0, got {}", args.theta)));
    }
    let p = ExitProblem::new(params, args.l, args.x)?;
    let cfg = QuadConfig::with_rel_tol(args.rel_tol);
    cfg.validate()?;
    let exact = mfet_exact(&p, &cfg)?;
    let bm = mfet_bm(&p);
    let bounds = match params.regime() {
        Regime::MeanReverting => Some(mfet_bounds(&p)?),
        _ => None,
    };
    let record = MfetRecord {
        d: args.d,
        l: args.l,
        x: args.x,
        sigma: args.sigma,
        theta: args.theta,
        lambda: params.lambda(),
        regime: params.regime().label().to_string(),
        mfet_exact: exact,
        mfet_bm: bm,
        ratio: (args.x < args.l).then(|| exact / bm),
        lower_bm: bounds.map(|b| b.lower_bm),
        lower_exp: bounds.map(|b| b.lower_exp),
        upper_mixed: bounds.map(|b| b.upper_mixed),
        upper_exp: bounds.map(|b| b.upper_exp),
    };
    sink.push(&record)
}

/// Censoring horizon used when none is given: 10⁶ steps, stretched to 100
/// mean exit times when that is longer.
pub fn default_horizon(dt: f64, mean_exit: f64) -> f64 {
    (1e6 * dt).max(100.0 * mean_exit)
}

/// Scaling parameters after applying the preset.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingPlan {
    pub dims: Vec<u32>,
    #[serde(rename = "L")]
    pub l: f64,
    pub x: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub paths: usize,
    pub dt: f64,
    /// `None` picks [`default_horizon`] per row.
    pub t_max: Option<f64>,
    pub scheme: Scheme,
    pub rel_tol: f64,
}

impl ScalingPlan {
    pub fn resolve(args: &ScalingArgs, allow_huge: bool) -> Result<Self> {
        let (l, lambda, dt) = match args.preset {
            ScalingPreset::Left => (4.0, 0.5, 1e-3),
            ScalingPreset::Right => (3.0, 0.7, 1e-4),
        };
        let (lo, hi) = (args.d_min, args.d_max);
        if !lo.is_power_of_two() || !hi.is_power_of_two() || lo > hi {
            return Err(usage(format!("d-min and d-max must be powers of two with d-min <= d-max, got {lo} and {hi}")));
        }
        check_dimension(hi, allow_huge)?;
        let dims = std::iter::successors(Some(lo), |&d| d.checked_mul(2))
            .take_while(|&d| d <= hi)
            .collect();
        let dt = args.dt.unwrap_or(dt);
        Ok(Self {
            dims,
            l: args.l.unwrap_or(l),
            x: args.x.unwrap_or(0.0),
            sigma: args.sigma.unwrap_or(1.0),
            lambda: args.lambda.unwrap_or(lambda),
            paths: args.paths,
            dt,
            t_max: args.t_max,
            scheme: args.scheme,
            rel_tol: args.rel_tol,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingRow {
    pub d: u32,
    pub mfet_exact: f64,
    pub lower_bm: f64,
    pub lower_exp: Option<f64>,
    pub upper_mixed: Option<f64>,
    pub upper_exp: Option<f64>,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub n_censored: usize,
}

pub fn scaling(plan: &ScalingPlan, seed: u64, sink: &mut Sink) -> Result<()> {
    let quad = QuadConfig::with_rel_tol(plan.rel_tol);
    quad.validate()?;
    McConfig::new(plan.paths, plan.dt, seed, plan.scheme).validate()?;
    for &d in &plan.dims {
        let params = OupParams::from_lambda(plan.lambda, plan.sigma, d)?;
        let p = ExitProblem::new(params, plan.l, plan.x)?;
        let bounds = match params.regime() {
            Regime::MeanReverting => Some(mfet_bounds(&p)?),
            _ => None,
        };
        let exact = mfet_exact(&p, &quad)?;
        let t_max = plan.t_max.unwrap_or_else(|| default_horizon(plan.dt, exact));
        let mc = McConfig::new(plan.paths, plan.dt, seed, plan.scheme).with_t_max(t_max);
        let est = estimate_mfet(&p, &mc)?;
        sink.push(&ScalingRow {
            d,
            mfet_exact: exact,
            lower_bm: mfet_bm(&p),
            lower_exp: bounds.map(|b| b.lower_exp),
            upper_mixed: bounds.map(|b| b.upper_mixed),
            upper_exp: bounds.map(|b| b.upper_exp),
            mc_mean: est.mean,
            mc_stderr: est.std_err,
            n_censored: est.n_censored,
        })?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub d: u32,
    pub theta: f64,
    pub t: f64,
    pub radius: f64,
    /// 1 on the sample where the path left the ball.
    pub exited: u8,
}

pub fn trajectories(args: &TrajectoryArgs, seed: u64, allow_huge: bool, sink: &mut Sink) -> Result<()> {
    if args.d.is_empty() {
        return Err(usage("need at least one dimension"));
    }
    for &d in &args.d {
        check_dimension(d, allow_huge)?;
    }
    let quad = QuadConfig::default();
    for &d in &args.d {
        for theta in [args.theta, 0.0] {
            let p = ExitProblem::new(OupParams::new(theta, args.sigma, d)?, args.l, args.x)?;
            let t_max = match args.t_max {
                Some(t) => t,
                None => default_horizon(args.dt, mfet_exact(&p, &quad)?),
            };
            let cfg = McConfig::new(1, args.dt, seed, args.scheme).with_t_max(t_max);
            let rec = record_path(&p, &cfg, 0, args.stride)?;
            let last = rec.times.len() - 1;
            for (i, (&t, &radius)) in rec.times.iter().zip(&rec.radii).enumerate() {
                let exited = u8::from(i == last && rec.exited_at.is_some());
                sink.push(&TrajectoryRow { d, theta, t, radius, exited })?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftRow {
    pub d: u32,
    pub rho: f64,
    pub ratio: f64,
}

pub fn resolve_rho_max(args: &DriftRatioArgs) -> f64 {
    args.rho_max.unwrap_or(match args.preset {
        DriftPreset::Left => args.l,
        DriftPreset::Right => 10.0 * args.l,
    })
}

pub fn drift_ratio_table(args: &DriftRatioArgs, allow_huge: bool, sink: &mut Sink) -> Result<()> {
    let rho_max = resolve_rho_max(args);
    if !(rho_max.is_finite() && rho_max >= 0.0) {
        return Err(usage(format!("rho-max must be finite and non-negative, got {rho_max}")));
    }
    if args.points < 2 {
        return Err(usage("need at least 2 points"));
    }
    for &d in &args.d_list {
        check_dimension(d, allow_huge)?;
        let params = OupParams::new(args.theta, args.sigma, d)?;
        for i in 0..args.points {
            let rho = rho_max * i as f64 / (args.points - 1) as f64;
            sink.push(&DriftRow { d, rho, ratio: drift_ratio(&params, rho) })?;
        }
    }
    Ok(())
}
