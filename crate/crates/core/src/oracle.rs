//! Brute-force composite Simpson references. Test-only; shares no code with
//! the adaptive quadrature or the series/continued-fraction evaluators.

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = f(a + h * i as f64);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b))
}

/// γ(a,x) after t = u²: ∫₀^{√x} 2u^{2a−1} e^{−u²} du.
pub fn simpson_lower_gamma(a: f64, x: f64, n: usize) -> f64 {
    simpson(|u| 2.0 * u.powf(2.0 * a - 1.0) * (-u * u).exp(), 0.0, x.sqrt(), n)
}

/// Γ(a) as γ(a, x) with x far in the tail.
pub fn simpson_gamma(a: f64) -> f64 {
    simpson_lower_gamma(a, 4.0 * a + 150.0, 400_000)
}

/// ln γ(a,x) by Simpson on exp((a−1) ln t − t), shifted by its maximum.
pub fn ln_simpson_lower_gamma(a: f64, x: f64, n: usize) -> f64 {
    let log_f = |t: f64| if t == 0.0 { f64::NEG_INFINITY } else { (a - 1.0) * t.ln() - t };
    let peak = (a - 1.0).clamp(0.0, x);
    let m = log_f(peak.max(x * 1e-12));
    m + simpson(|t| (log_f(t) - m).exp(), 0.0, x, n).ln()
}

/// The double integral (2/σ²) ∫ₓᴸ z^{1−d} e^{λz²} ∫₀ᶻ t^{d−1} e^{−λt²} dt dz by
/// nested Simpson rules.
pub fn nested_simpson_mfet(sigma: f64, lambda: f64, d: u32, l: f64, x: f64, n: usize) -> f64 {
    let d = d as f64;
    let inner = |z: f64| simpson(|t| t.powf(d - 1.0) * (-lambda * t * t).exp(), 0.0, z, n);
    let outer = |z: f64| {
        if z == 0.0 {
            0.0
        } else {
            z.powf(1.0 - d) * (lambda * z * z).exp() * inner(z)
        }
    };
    2.0 / (sigma * sigma) * simpson(outer, x, l, n)
}
