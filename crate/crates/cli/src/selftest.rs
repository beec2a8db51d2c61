use anyhow::Result;
use oupexit::quadrature::{integrate, integrate_log};
use oupexit::special::{ln_gamma, ln_lower_gamma, ln_neuman_bounds, reg_lower_gamma};
use oupexit::{
    estimate_mfet, mfet_bm, mfet_bounds, mfet_exact, ExitProblem, GammaArgs, McConfig, OupParams,
    QuadConfig, Scheme,
};
use serde::Serialize;

use crate::args::{Fault, SelftestArgs};
use crate::output::Sink;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub check: &'static str,
    pub status: &'static str,
    pub detail: String,
}

/// First failing check, if any.
pub struct Failure {
    pub check: &'static str,
    pub detail: String,
}

type Check = (&'static str, fn(&Grid) -> Result<String, String>);

const CHECKS: [Check; 8] = [
    ("gamma-bracket", gamma_bracket),
    ("gamma-monotone", gamma_monotone),
    ("gamma-limit", gamma_limit),
    ("quadrature-shift", quadrature_shift),
    ("substitution-identity", substitution_identity),
    ("brownian-reduction", brownian_reduction),
    ("bound-chain", bound_chain),
    ("mc-determinism", mc_determinism),
];

struct Grid {
    dims: Vec<u32>,
    fault: Option<Fault>,
}

impl Grid {
    fn ln_gamma_lower(&self, args: GammaArgs) -> Result<f64, String> {
        let v = ln_lower_gamma(args).map_err(|e| e.to_string())?;
        Ok(match self.fault {
            Some(Fault::Gamma) => v + 0.25,
            None => v,
        })
    }
}

const SHAPES: [f64; 7] = [0.5, 1.0, 2.5, 5.0, 10.0, 50.0, 500.0];
const LAMBDAS: [f64; 4] = [0.1, 0.5, 0.7, 2.0];
const BALLS: [(f64, f64); 4] = [(4.0, 0.0), (3.0, 0.0), (2.0, 1.0), (2.5, 2.5)];

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (step * i as f64).exp()).collect()
}

fn gamma_args(a: f64, x: f64) -> Result<GammaArgs, String> {
    GammaArgs::new(a, x).map_err(|e| e.to_string())
}

fn gamma_bracket(g: &Grid) -> Result<String, String> {
    let xs = log_grid(1e-6, 1e4, 40);
    for &a in &SHAPES {
        for &x in &xs {
            let args = gamma_args(a, x)?;
            let (lo, hi) = ln_neuman_bounds(args);
            let mid = g.ln_gamma_lower(args)?;
            if !(lo <= mid.next_up() && mid <= hi.next_up()) {
                return Err(format!(
                    "neuman_bounds lower <= gamma <= upper violated at a={a}, x={x}: ln values {lo}, {mid}, {hi}"
                ));
            }
        }
    }
    Ok(format!("{} points", SHAPES.len() * xs.len()))
}

fn gamma_monotone(_: &Grid) -> Result<String, String> {
    let xs = log_grid(1e-6, 1e4, 40);
    for &a in &SHAPES {
        let mut prev = 0.0;
        for &x in &xs {
            let p = reg_lower_gamma(gamma_args(a, x)?).map_err(|e| e.to_string())?;
            if !(prev..=1.0).contains(&p) {
                return Err(format!("P(a, x) not monotone in [0, 1] at a={a}, x={x}: {p} after {prev}"));
            }
            prev = p;
        }
    }
    Ok("P(a, x) nondecreasing".into())
}

fn gamma_limit(g: &Grid) -> Result<String, String> {
    let mut worst = 0.0f64;
    for &a in &SHAPES {
        let full = ln_gamma(a).map_err(|e| e.to_string())?;
        let dev = (g.ln_gamma_lower(gamma_args(a, 100.0 * a)?)? - full).exp_m1().abs();
        if dev > 1e-10 {
            return Err(format!("gamma(a, 100a) deviates from Gamma(a) by {dev:e} at a={a}"));
        }
        worst = worst.max(dev);
    }
    Ok(format!("max relative deviation {worst:e}"))
}

fn quadrature_shift(_: &Grid) -> Result<String, String> {
    let cfg = QuadConfig::default();
    let f = |z: f64| -1.5 * z + (1.0 + z * z).ln();
    let base = integrate_log(f, 0.0, 3.0, &cfg).map_err(|e| e.to_string())?.ln_value;
    for c in [-1e4, -250.0, 250.0, 1e4] {
        let shifted = integrate_log(|z| f(z) + c, 0.0, 3.0, &cfg).map_err(|e| e.to_string())?.ln_value;
        let target = base + c;
        let tol = 1e-12 + 2.0 * (target.abs().next_up() - target.abs());
        if (shifted - target).abs() > tol {
            return Err(format!("shift by {c} moved the log integral by {}", shifted - base));
        }
    }
    Ok("C = ±1e4".into())
}

fn substitution_identity(_: &Grid) -> Result<String, String> {
    let cfg = QuadConfig::default();
    for d in [2u32, 5] {
        for lambda in [0.5, 2.0] {
            for z in [0.5, 1.0, 3.0] {
                let dm1 = (d - 1) as i32;
                let direct = integrate(|t| t.powi(dm1) * (-lambda * t * t).exp(), 0.0, z, &cfg)
                    .map_err(|e| e.to_string())?
                    .value;
                let a = 0.5 * d as f64;
                let ln_g = ln_lower_gamma(gamma_args(a, lambda * z * z)?).map_err(|e| e.to_string())?;
                let reduced = 0.5 * (ln_g - a * lambda.ln()).exp();
                if ((direct - reduced) / reduced).abs() > 1e-10 {
                    return Err(format!("d={d}, lambda={lambda}, z={z}: {direct} vs {reduced}"));
                }
            }
        }
    }
    Ok("12 points".into())
}

fn problem(lambda: f64, d: u32, l: f64, x: f64) -> Result<ExitProblem, String> {
    OupParams::from_lambda(lambda, 1.0, d)
        .and_then(|p| ExitProblem::new(p, l, x))
        .map_err(|e| e.to_string())
}

fn brownian_reduction(g: &Grid) -> Result<String, String> {
    let cfg = QuadConfig::default();
    let mut worst = 0.0f64;
    for lambda in [1e-12, -1e-12] {
        for &d in &g.dims {
            for &(l, x) in BALLS.iter().filter(|(l, x)| x < l) {
                let p = problem(lambda, d, l, x)?;
                let exact = mfet_exact(&p, &cfg).map_err(|e| e.to_string())?;
                let dev = ((exact - mfet_bm(&p)) / mfet_bm(&p)).abs();
                if dev > 1e-6 {
                    return Err(format!("lambda={lambda}, d={d}, L={l}, x={x}: relative gap {dev:e}"));
                }
                worst = worst.max(dev);
            }
        }
    }
    Ok(format!("max relative gap {worst:e}"))
}

fn bound_chain(g: &Grid) -> Result<String, String> {
    let cfg = QuadConfig::default();
    let mut n = 0;
    for &lambda in &LAMBDAS {
        for &d in &g.dims {
            for &(l, x) in &BALLS {
                let p = problem(lambda, d, l, x)?;
                let b = mfet_bounds(&p).map_err(|e| e.to_string())?;
                let exact = mfet_exact(&p, &cfg).map_err(|e| e.to_string())?;
                let inside = b.lower_exp <= exact * (1.0 + 1e-8) && exact <= b.upper_mixed * (1.0 + 1e-8);
                if !(b.is_ordered() && inside) {
                    return Err(format!("lambda={lambda}, d={d}, L={l}, x={x}: {b:?}, exact {exact}"));
                }
                n += 1;
            }
        }
    }
    Ok(format!("{n} points"))
}

fn mc_determinism(_: &Grid) -> Result<String, String> {
    let p = problem(0.5, 3, 1.5, 0.0)?;
    let cfg = McConfig::new(48, 1e-3, 7, Scheme::FullExact);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?
            .install(|| estimate_mfet(&p, &cfg))
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run(1)?, run(4)?);
    if a.mean.to_bits() != b.mean.to_bits() || a.std_err.to_bits() != b.std_err.to_bits() {
        return Err(format!("1 thread gave {a:?}, 4 threads gave {b:?}"));
    }
    Ok("1 vs 4 threads bitwise equal".into())
}

/// Runs every check, writing one row each. Returns the first failure.
pub fn run(args: &SelftestArgs, sink: &mut Sink) -> anyhow::Result<Option<Failure>> {
    let max_k = if args.fast { 8 } else { 12 };
    let grid = Grid {
        dims: (0..=max_k).map(|k| 1u32 << k).collect(),
        fault: args.inject_fault,
    };
    let mut first = None;
    for (check, f) in CHECKS {
        let (status, detail) = match f(&grid) {
            Ok(detail) => ("PASS", detail),
            Err(detail) => ("FAIL", detail),
        };
        sink.push(&CheckRow { check, status, detail: detail.clone() })?;
        if status == "FAIL" && first.is_none() {
            first = Some(Failure { check, detail });
        }
    }
    Ok(first)
}
