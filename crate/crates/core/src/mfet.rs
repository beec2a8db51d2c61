//! Mean first-exit time (MFET) of the d-dimensional Ornstein–Uhlenbeck process
//! `dX = −θX dt + σ dB` from the ball of radius L, started at radius x.
//!
//! With λ = θ/σ² the exact value is
//!
//! ```text
//! E τ = (2/σ²) ∫ₓᴸ z^{1−d} e^{λz²} ∫₀ᶻ t^{d−1} e^{−λt²} dt dz,
//! ```
//!
//! which for λ > 0 collapses to a single integral over the lower incomplete
//! gamma function γ(d/2, λz²). Both forms are evaluated in log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{try_integrate, try_integrate_log, QuadConfig};
use crate::special::{ln_lower_gamma_scaled, GammaArgs, LOG_ZERO};

/// Sign of the drift, which decides what can be said about the exit time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// θ = 0.
    Brownian,
    /// θ > 0; the closed-form bounds apply.
    MeanReverting,
    /// θ < 0; the drift pushes outward.
    Transient,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::Brownian => "brownian",
            Regime::MeanReverting => "mean-reverting",
            Regime::Transient => "transient regime",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OupParams {
    theta: f64,
    sigma: f64,
    d: u32,
}

impl OupParams {
    pub fn new(theta: f64, sigma: f64, d: u32) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::domain(format!("theta must be finite, got {theta}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
        }
        if d == 0 {
            return Err(Error::domain("dimension must be at least 1"));
        }
        Ok(Self { theta, sigma, d })
    }

    /// Parameters with θ = λσ².
    pub fn from_lambda(lambda: f64, sigma: f64, d: u32) -> Result<Self> {
        Self::new(lambda * sigma * sigma, sigma, d)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// λ = θ/σ².
    pub fn lambda(&self) -> f64 {
        self.theta / (self.sigma * self.sigma)
    }

    pub fn regime(&self) -> Regime {
        if self.theta > 0.0 {
            Regime::MeanReverting
        } else if self.theta < 0.0 {
            Regime::Transient
        } else {
            Regime::Brownian
        }
    }

    pub fn with_dimension(&self, d: u32) -> Result<Self> {
        Self::new(self.theta, self.sigma, d)
    }
}

/// Exit from the ball of radius `radius` (L) started at distance `start` (x)
/// from the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitProblem {
    params: OupParams,
    radius: f64,
    start: f64,
}

impl ExitProblem {
    pub fn new(params: OupParams, radius: f64, start: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::domain(format!("ball radius must be positive, got {radius}")));
        }
        if !(start.is_finite() && (0.0..=radius).contains(&start)) {
            return Err(Error::domain(format!(
                "start radius must lie in [0, {radius}], got {start}"
            )));
        }
        Ok(Self { params, radius, start })
    }

    pub fn params(&self) -> &OupParams {
        &self.params
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn with_start(&self, start: f64) -> Result<Self> {
        Self::new(self.params, self.radius, start)
    }

    pub fn with_params(&self, params: OupParams) -> Result<Self> {
        Self::new(params, self.radius, self.start)
    }

    /// L² − x², formed as (L − x)(L + x).
    fn span_sq(&self) -> f64 {
        (self.radius - self.start) * (self.radius + self.start)
    }
}

/// Closed-form bounds on the exit time for θ > 0. Values too large for `f64`
/// come back as `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MfetBounds {
    /// (2/(σ²d(d+2)))·((e^{λL²} − e^{λx²})/λ + (d/2)(L² − x²))
    pub upper_mixed: f64,
    /// (e^{λL²} − e^{λx²})/(θd)
    pub upper_exp: f64,
    /// ((1 + 2/d)/(2λσ²))·(e^{2λL²/(d+2)} − e^{2λx²/(d+2)})
    pub lower_exp: f64,
    /// (L² − x²)/(σ²d), the Brownian exit time.
    pub lower_bm: f64,
}

impl MfetBounds {
    /// Checks `lower_bm ≤ lower_exp ≤ upper_mixed ≤ upper_exp`.
    pub fn is_ordered(&self) -> bool {
        self.lower_bm <= self.lower_exp
            && self.lower_exp <= self.upper_mixed
            && self.upper_mixed <= self.upper_exp
    }
}

/// ln(e^{hi} − e^{lo}) for hi ≥ lo.
fn ln_exp_diff(hi: f64, lo: f64) -> f64 {
    lo + ln_expm1(hi - lo)
}

fn ln_expm1(u: f64) -> f64 {
    if u <= 0.0 {
        LOG_ZERO
    } else if u > 40.0 {
        u + (-(-u).exp()).ln_1p()
    } else {
        u.exp_m1().ln()
    }
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == LOG_ZERO {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// The Brownian exit time (L² − x²)/(σ²d). θ is ignored.
pub fn mfet_bm(p: &ExitProblem) -> f64 {
    let sigma = p.params.sigma;
    p.span_sq() / (sigma * sigma * p.params.d as f64)
}

/// The four closed-form bounds. Requires θ > 0.
pub fn mfet_bounds(p: &ExitProblem) -> Result<MfetBounds> {
    let OupParams { theta, sigma, d } = p.params;
    if theta <= 0.0 {
        return Err(Error::domain(format!(
            "the closed-form bounds require theta > 0, got {theta}"
        )));
    }
    let lambda = p.params.lambda();
    let d = d as f64;
    let (l2, x2) = (p.radius * p.radius, p.start * p.start);
    let span = p.span_sq();
    let ln_sigma2 = 2.0 * sigma.ln();

    // ln(e^{λL²} − e^{λx²})
    let ln_growth = ln_exp_diff(lambda * l2, lambda * x2);

    let upper_exp = (ln_growth - theta.ln() - d.ln()).exp();

    let ln_mixed_sum = ln_add_exp(ln_growth - lambda.ln(), (0.5 * d * span).ln());
    let upper_mixed = ((2.0f64).ln() - ln_sigma2 - d.ln() - (d + 2.0).ln() + ln_mixed_sum).exp();

    let rate = 2.0 * lambda / (d + 2.0);
    let ln_lower_growth = ln_exp_diff(rate * l2, rate * x2);
    let lower_exp = ((1.0 + 2.0 / d).ln() - (2.0 * lambda).ln() - ln_sigma2 + ln_lower_growth).exp();

    Ok(MfetBounds {
        upper_mixed,
        upper_exp,
        lower_exp,
        lower_bm: mfet_bm(p),
    })
}

/// ln of (c/σ²) ∫ over [lo, hi] of the outer integrand, where c = 1 on the
/// gamma path (λ > 0) and c = 2 on the nested path (λ ≤ 0).
fn ln_exit_integral(p: &ExitProblem, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<f64> {
    if lo >= hi {
        return Ok(LOG_ZERO);
    }
    let OupParams { sigma, d, .. } = p.params;
    let lambda = p.params.lambda();
    let ln_sigma2 = 2.0 * sigma.ln();

    let outer = if lambda > 0.0 {
        // z^{1−d} e^{λz²} γ(d/2, λz²) / λ^{d/2} = z · γ(a,y) e^y y^{−a}, y = λz²
        let a = 0.5 * d as f64;
        try_integrate_log(
            |z| Ok(z.ln() + ln_lower_gamma_scaled(GammaArgs::new(a, lambda * z * z)?)?),
            lo,
            hi,
            cfg,
        )?
    } else {
        let r = try_integrate_log(|z| Ok(z.ln() + nested_inner(lambda, d, z, cfg)?.ln()), lo, hi, cfg)?;
        crate::quadrature::LogQuadResult {
            ln_value: r.ln_value + std::f64::consts::LN_2,
            ln_err_estimate: r.ln_err_estimate + std::f64::consts::LN_2,
            ..r
        }
    };
    if !outer.converged {
        return Err(Error::Quadrature { partial: outer.to_linear() });
    }
    Ok(outer.ln_value - ln_sigma2)
}

/// ∫₀¹ s^{d−1} e^{λz²(1−s²)} ds, which is z^{−d} e^{λz²} ∫₀ᶻ t^{d−1} e^{−λt²} dt.
fn nested_inner(lambda: f64, d: u32, z: f64, cfg: &QuadConfig) -> Result<f64> {
    let power = d as f64 - 1.0;
    let scale = lambda * z * z;
    let r = try_integrate(
        |s| {
            let log_power = if power == 0.0 { 0.0 } else { power * s.ln() };
            Ok((log_power + scale * (1.0 - s * s)).exp())
        },
        0.0,
        1.0,
        cfg,
    )?;
    if !r.converged {
        return Err(Error::Quadrature { partial: r });
    }
    Ok(r.value)
}

/// ln E τ. [`LOG_ZERO`] when the process starts on the sphere.
pub fn ln_mfet_exact(p: &ExitProblem, cfg: &QuadConfig) -> Result<f64> {
    if p.start == p.radius {
        return Ok(LOG_ZERO);
    }
    ln_exit_integral(p, p.start, p.radius, cfg)
}

/// The exact mean exit time for any real θ.
pub fn mfet_exact(p: &ExitProblem, cfg: &QuadConfig) -> Result<f64> {
    if p.start == p.radius {
        return Ok(0.0);
    }
    Ok(ln_mfet_exact(p, cfg)?.exp())
}

/// E τ divided by the Brownian exit time; tends to 1 as d grows for θ ≥ 0.
pub fn asymptotic_ratio(p: &ExitProblem, cfg: &QuadConfig) -> Result<f64> {
    if p.start == p.radius {
        return Err(Error::domain("ratio undefined when starting on the sphere (0/0)"));
    }
    Ok((ln_mfet_exact(p, cfg)? - mfet_bm(p).ln()).exp())
}

/// Drift of the squared radial process divided by its Brownian value,
/// (σ²d − 2θρ²)/(σ²d).
pub fn drift_ratio(params: &OupParams, rho: f64) -> f64 {
    let OupParams { theta, sigma, d } = *params;
    let bm = sigma * sigma * d as f64;
    (bm - 2.0 * theta * rho * rho) / bm
}

/// Finite-difference step used when none is given: 10⁻³ L.
pub fn default_fd_step(p: &ExitProblem) -> f64 {
    1e-3 * p.radius
}

/// Residual of the radial boundary value problem
/// `u'' − (2λx − (d−1)/x) u' + 2/σ² = 0` for u(x) = E^x τ, with u' and u'' by
/// central differences of step `h` around `x_eval`.
///
/// The differences u(x±h) − u(x) are integrated directly over [x−h, x] and
/// [x, x+h] rather than by subtracting full exit times.
pub fn avp_residual(p: &ExitProblem, x_eval: f64, h: f64, cfg: &QuadConfig) -> Result<f64> {
    if !(h > 0.0 && x_eval - h > 0.0 && x_eval + h < p.radius) {
        return Err(Error::domain(format!(
            "need 0 < x-h and x+h < L, got x={x_eval}, h={h}, L={}",
            p.radius
        )));
    }
    // u(x−h) − u(x) = below, u(x+h) − u(x) = −above
    let below = ln_exit_integral(p, x_eval - h, x_eval, cfg)?.exp();
    let above = ln_exit_integral(p, x_eval, x_eval + h, cfg)?.exp();
    let second = (below - above) / (h * h);
    let first = -(below + above) / (2.0 * h);

    let OupParams { sigma, d, .. } = p.params;
    let coeff = 2.0 * p.params.lambda() * x_eval - (d as f64 - 1.0) / x_eval;
    Ok(second - coeff * first + 2.0 / (sigma * sigma))
}
