//! Log-gamma, the lower incomplete gamma function γ(a, x) = ∫₀ˣ t^{a−1} e^{−t} dt,
//! and elementary two-sided bounds on γ.
//!
//! Everything that can overflow is carried in log space. γ is split into a
//! power series for `x < a + 1` and a continued fraction for the complementary
//! function otherwise.

use crate::error::{Error, Result};

/// Logarithm of an exactly vanishing quantity.
pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this the Stirling series is reached by upward recurrence.
const STIRLING_MIN: f64 = 10.0;

const SERIES_TOL: f64 = 1e-16;
const FRACTION_TOL: f64 = f64::EPSILON;
const TINY: f64 = 1e-300;
const BASE_ITERATIONS: usize = 500;

/// Shape and argument of an incomplete gamma evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaArgs {
    a: f64,
    x: f64,
}

impl GammaArgs {
    pub fn new(a: f64, x: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::domain(format!(
                "gamma shape must be positive and finite, got {a}"
            )));
        }
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::domain(format!(
                "gamma argument must be non-negative and finite, got {x}"
            )));
        }
        Ok(Self { a, x })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn x(&self) -> f64 {
        self.x
    }
}

/// ln Γ(a) for a > 0.
pub fn ln_gamma(a: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::domain(format!(
            "ln_gamma needs a positive finite argument, got {a}"
        )));
    }
    Ok(ln_gamma_pos(a))
}

fn ln_gamma_pos(a: f64) -> f64 {
    if a >= STIRLING_MIN {
        return (a - 0.5) * a.ln() - a + LN_SQRT_2PI + stirling_correction(a);
    }
    // Γ(a) = Γ(a + n) / (a (a+1) ... (a+n-1))
    let n = (STIRLING_MIN - a).ceil();
    let mut product = 1.0;
    let mut k = 0.0;
    while k < n {
        product *= a + k;
        k += 1.0;
    }
    ln_gamma_pos(a + n) - product.ln()
}

/// ln Γ(a) − [(a − ½) ln a − a + ½ ln 2π], valid for a ≥ 10.
fn stirling_correction(a: f64) -> f64 {
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
    ];
    let r = 1.0 / a;
    let r2 = r * r;
    let poly = C.iter().rev().fold(0.0, |acc, &c| acc * r2 + c);
    poly * r
}

/// ln(xᵃ e^{−x} / Γ(a)). For large a the leading terms cancel, so the
/// Stirling form a·[ln(1+t) − t] + ½ ln(a/2π) − μ(a), t = (x − a)/a, is used.
fn ln_prefactor(a: f64, x: f64) -> f64 {
    if a < STIRLING_MIN {
        return a * x.ln() - x - ln_gamma_pos(a);
    }
    let t = (x - a) / a;
    a * (t.ln_1p() - t) + 0.5 * (a / (2.0 * std::f64::consts::PI)).ln() - stirling_correction(a)
}

fn max_iterations(a: f64) -> usize {
    // Both expansions need O(√a) terms when x is close to a.
    BASE_ITERATIONS + (10.0 * a.sqrt()).ceil() as usize
}

/// Σ_{n≥1} Π_{k=1..n} x/(a+k). With T = 1 + tail, γ(a,x) = xᵃ e^{−x} T / a.
fn series_tail(a: f64, x: f64) -> Result<f64> {
    let limit = max_iterations(a);
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 1..=limit {
        term *= x / (a + n as f64);
        sum += term;
        if term <= sum * SERIES_TOL {
            return Ok(sum);
        }
    }
    Err(Error::Convergence {
        what: "incomplete gamma series",
        iterations: limit,
    })
}

/// Modified Lentz evaluation of the continued fraction for the upper function,
/// scaled so that Q(a,x) = exp(ln_prefactor) · h.
fn continued_fraction(a: f64, x: f64) -> Result<f64> {
    let limit = max_iterations(a);
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=limit {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= FRACTION_TOL {
            return Ok(h);
        }
    }
    Err(Error::Convergence {
        what: "incomplete gamma continued fraction",
        iterations: limit,
    })
}

fn upper_regularized_cf(a: f64, x: f64) -> Result<f64> {
    let h = continued_fraction(a, x)?;
    Ok((ln_prefactor(a, x) + h.ln()).exp())
}

fn uses_series(a: f64, x: f64) -> bool {
    x < a + 1.0
}

/// P(a,x) by the power series, regardless of which branch would be chosen.
pub(crate) fn reg_lower_series(a: f64, x: f64) -> Result<f64> {
    let tail = series_tail(a, x)?;
    Ok((ln_prefactor(a, x) - a.ln() + tail.ln_1p()).exp().min(1.0))
}

/// P(a,x) as 1 − Q(a,x) by the continued fraction.
pub(crate) fn reg_lower_cf(a: f64, x: f64) -> Result<f64> {
    Ok(1.0 - upper_regularized_cf(a, x)?)
}

/// Regularized lower incomplete gamma P(a,x) = γ(a,x)/Γ(a).
pub fn reg_lower_gamma(args: GammaArgs) -> Result<f64> {
    let GammaArgs { a, x } = args;
    if x == 0.0 {
        return Ok(0.0);
    }
    if uses_series(a, x) {
        reg_lower_series(a, x)
    } else {
        reg_lower_cf(a, x)
    }
}

// Shared by ln_lower_gamma and neuman_bounds so that both are rounded
// from the same leading term.
fn ln_base(a: f64, x: f64) -> f64 {
    a * x.ln() - a.ln()
}

/// ln γ(a,x). Returns [`LOG_ZERO`] at x = 0.
///
/// On the series branch this is `a ln x − ln a − x + ln T`; on the
/// continued-fraction branch `ln Γ(a) + ln(1 − Q)`. Neither forms γ itself,
/// so arguments far beyond the range of `f64` are fine.
pub fn ln_lower_gamma(args: GammaArgs) -> Result<f64> {
    let GammaArgs { a, x } = args;
    if x == 0.0 {
        return Ok(LOG_ZERO);
    }
    if uses_series(a, x) {
        let tail = series_tail(a, x)?;
        Ok(ln_base(a, x) + (tail.ln_1p() - x))
    } else {
        let q = upper_regularized_cf(a, x)?;
        Ok(ln_gamma_pos(a) + (-q).ln_1p())
    }
}

/// ln(γ(a,y) · e^y · y^{−a}), the combination that appears under the outer
/// integral of the exit-time formula. Finite at y = 0 where it equals −ln a.
pub fn ln_lower_gamma_scaled(args: GammaArgs) -> Result<f64> {
    let GammaArgs { a, x: y } = args;
    if uses_series(a, y) {
        let tail = series_tail(a, y)?;
        Ok(tail.ln_1p() - a.ln())
    } else {
        let q = upper_regularized_cf(a, y)?;
        Ok(ln_gamma_pos(a) + (-q).ln_1p() + y - a * y.ln())
    }
}

/// Logs of the bounds `(xᵃ/a)·exp(−ax/(a+1)) ≤ γ(a,x) ≤ xᵃ(1 + a e^{−x})/(a(a+1))`.
pub fn ln_neuman_bounds(args: GammaArgs) -> (f64, f64) {
    let GammaArgs { a, x } = args;
    let base = ln_base(a, x);
    let lower = base + (-a * x / (a + 1.0));
    // (1 + a e^{−x})/(a + 1) = 1 + a (e^{−x} − 1)/(a + 1)
    let upper = base + (a * (-x).exp_m1() / (a + 1.0)).ln_1p();
    (lower, upper)
}

/// Two-sided elementary bounds on γ(a,x), as `(lower, upper)`.
pub fn neuman_bounds(args: GammaArgs) -> (f64, f64) {
    let (lo, hi) = ln_neuman_bounds(args);
    (lo.exp(), hi.exp())
}
