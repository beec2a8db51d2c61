//! Adaptive Gauss–Kronrod quadrature on a finite interval.
//!
//! Each panel is integrated with the 15-point Kronrod rule; the embedded
//! 7-point Gauss rule supplies the error estimate. The panel with the largest
//! estimated error is bisected until the global tolerance is met or the panel
//! budget runs out. Nodes are interior, so endpoints are never sampled.
//!
//! [`integrate_log`] takes the integrand's logarithm and returns the logarithm
//! of the integral. Every panel is exponentiated relative to its own maximum,
//! so integrands of size e^{±10⁴} are handled without overflow.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::LOG_ZERO;

// Nodes and weights are kept at their tabulated precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Round-off floor on a panel's error, relative to its absolute integral.
const ROUNDOFF: f64 = 50.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_panels: 4096,
        }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::domain(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if !(self.abs_tol >= 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::domain(format!("abs_tol must be non-negative, got {}", self.abs_tol)));
        }
        if self.max_panels == 0 {
            return Err(Error::domain("max_panels must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub err_estimate: f64,
    pub panels_used: usize,
    pub converged: bool,
}

/// Result of [`integrate_log`]: logarithms of the integral and of its error
/// estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogQuadResult {
    pub ln_value: f64,
    pub ln_err_estimate: f64,
    pub panels_used: usize,
    pub converged: bool,
}

impl LogQuadResult {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }

    pub fn to_linear(&self) -> QuadResult {
        QuadResult {
            value: self.ln_value.exp(),
            err_estimate: self.ln_err_estimate.exp(),
            panels_used: self.panels_used,
            converged: self.converged,
        }
    }
}

/// ∫ₐᵇ f. Errors on a non-finite sample; an exhausted panel budget is
/// reported through `converged = false`.
pub fn integrate<F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    try_integrate(|z| Ok(f(z)), a, b, cfg)
}

/// ln ∫ₐᵇ exp(log_f). `log_f` may return [`LOG_ZERO`]. Convergence is judged
/// by `rel_tol` alone.
pub fn integrate_log<F>(log_f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<LogQuadResult>
where
    F: Fn(f64) -> f64,
{
    try_integrate_log(|z| Ok(log_f(z)), a, b, cfg)
}

/// [`integrate`] for integrands that can fail.
pub fn try_integrate<F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64>,
{
    let eval = |lo: f64, hi: f64| -> Result<Panel> {
        let (center, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let mut kronrod = 0.0;
        let mut gauss = 0.0;
        let mut abs = 0.0;
        for (i, (&node, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
            let nodes: &[f64] = if node == 0.0 {
                &[center]
            } else {
                &[center - half * node, center + half * node]
            };
            for &z in nodes {
                let v = f(z)?;
                if !v.is_finite() {
                    return Err(Error::Evaluation { abscissa: z, value: v });
                }
                kronrod += wk * v;
                abs += wk * v.abs();
                if i % 2 == 1 {
                    gauss += WG[i / 2] * v;
                }
            }
        }
        let value = kronrod * half;
        let err = ((kronrod - gauss) * half).abs().max(ROUNDOFF * abs * half);
        Ok(Panel { lo, hi, value, err })
    };

    let outcome = adapt(eval, a, b, cfg, |panels| {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum();
        (value, err, err <= cfg.abs_tol.max(cfg.rel_tol * value.abs()))
    })?;
    Ok(QuadResult {
        value: outcome.value,
        err_estimate: outcome.err,
        panels_used: outcome.panels,
        converged: outcome.converged,
    })
}

/// [`integrate_log`] for integrands that can fail.
pub fn try_integrate_log<F>(log_f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<LogQuadResult>
where
    F: Fn(f64) -> Result<f64>,
{
    let eval = |lo: f64, hi: f64| -> Result<Panel> {
        let (center, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let mut samples = [(0.0, 0.0, 0.0); 15];
        let mut n = 0;
        let mut peak = LOG_ZERO;
        for (i, (&node, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
            let wg = if i % 2 == 1 { WG[i / 2] } else { 0.0 };
            let nodes: &[f64] = if node == 0.0 {
                &[center]
            } else {
                &[center - half * node, center + half * node]
            };
            for &z in nodes {
                let v = log_f(z)?;
                if v.is_nan() || v == f64::INFINITY {
                    return Err(Error::Evaluation { abscissa: z, value: v });
                }
                peak = peak.max(v);
                samples[n] = (v, wk, wg);
                n += 1;
            }
        }
        if peak == LOG_ZERO {
            return Ok(Panel { lo, hi, value: LOG_ZERO, err: LOG_ZERO });
        }
        let (mut kronrod, mut gauss) = (0.0, 0.0);
        for &(v, wk, wg) in &samples {
            let e = (v - peak).exp();
            kronrod += wk * e;
            gauss += wg * e;
        }
        let ln_half = half.ln();
        let value = peak + ln_half + kronrod.ln();
        let diff = (kronrod - gauss).abs();
        let err = if diff > 0.0 { peak + ln_half + diff.ln() } else { LOG_ZERO };
        // Integrand is positive, so |f| integrates to the value itself.
        let err = err.max(value + ROUNDOFF.ln());
        Ok(Panel { lo, hi, value, err })
    };

    // abs_tol is not used here: it would make convergence depend on e^c for
    // an integrand shifted by c.
    let ln_rel = cfg.rel_tol.ln();
    let outcome = adapt(eval, a, b, cfg, |panels| {
        let value = log_sum_exp(panels.iter().map(|p| p.value));
        let err = log_sum_exp(panels.iter().map(|p| p.err));
        (value, err, err <= ln_rel + value)
    })?;
    Ok(LogQuadResult {
        ln_value: outcome.value,
        ln_err_estimate: outcome.err,
        panels_used: outcome.panels,
        converged: outcome.converged,
    })
}

/// ln Σ exp(vᵢ), with every term taken relative to the largest.
pub fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let peak = values.clone().fold(LOG_ZERO, f64::max);
    if peak == LOG_ZERO || peak.is_infinite() {
        return peak;
    }
    peak + values.map(|v| (v - peak).exp()).sum::<f64>().ln()
}

// In log mode `value` and `err` hold logarithms; ordering by `err` is the
// same either way.
#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

struct Outcome {
    value: f64,
    err: f64,
    panels: usize,
    converged: bool,
}

fn adapt<E, T>(eval: E, a: f64, b: f64, cfg: &QuadConfig, totals: T) -> Result<Outcome>
where
    E: Fn(f64, f64) -> Result<Panel>,
    T: Fn(&[Panel]) -> (f64, f64, bool),
{
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::domain(format!("need finite a <= b, got [{a}, {b}]")));
    }
    let mut heap = BinaryHeap::new();
    heap.push(eval(a, b)?);
    loop {
        let panels = heap.as_slice();
        let (value, err, converged) = totals(panels);
        if converged || heap.len() >= cfg.max_panels {
            return Ok(Outcome { value, err, panels: heap.len(), converged });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Panel cannot be split further in floating point.
            heap.push(worst);
            let (value, err, _) = totals(heap.as_slice());
            return Ok(Outcome { value, err, panels: heap.len(), converged: false });
        }
        heap.push(eval(worst.lo, mid)?);
        heap.push(eval(mid, worst.hi)?);
    }
}
