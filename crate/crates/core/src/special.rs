//! Special functions: Hurwitz zeta (via the generalized Zipf kernel sum) and
//! the standard normal quantile.

use crate::dist::gpd::scaled_log1p;
use crate::error::{domain, Result};

/// Number of leading terms summed exactly before the Euler–Maclaurin tail.
const DIRECT_TERMS: usize = 50;

/// `B_{2j} / (2j)!` for j = 1..4.
const EM_COEFFS: [f64; 4] = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30_240.0, -1.0 / 1_209_600.0];

/// Generalized Zipf kernel `(1 + ξ i/σ)^(-1/ξ - 1)`, equal to 1 at i = 0.
#[inline]
pub(crate) fn zipf_kernel(i: f64, sigma: f64, xi: f64) -> f64 {
    (-(1.0 + xi) * scaled_log1p(i, sigma, xi)).exp()
}

/// `Σ_{i>=0} (1 + ξ i/σ)^(-1/ξ - 1)` for σ > 0, ξ >= 0.
///
/// Equals `q^s · H(s, q)` with `s = 1 + 1/ξ`, `q = σ/ξ`; at ξ = 0 it is the
/// geometric series `1/(1 - e^(-1/σ))`. The first [`DIRECT_TERMS`] terms are
/// summed directly and the remainder is the integral plus four
/// Euler–Maclaurin corrections. Every term is at most 1, so nothing
/// overflows however large `s` gets.
pub(crate) fn zipf_kernel_sum(sigma: f64, xi: f64) -> f64 {
    let n = DIRECT_TERMS;
    // Smallest terms first.
    let mut direct = 0.0;
    for i in (0..n).rev() {
        direct += zipf_kernel(i as f64, sigma, xi);
    }
    let g_n = zipf_kernel(n as f64, sigma, xi);
    if g_n == 0.0 {
        return direct;
    }
    // d = ξ (q + N); every derivative of the kernel at N carries a factor
    // (1 + (l+1) ξ) / d.
    let d = sigma + xi * n as f64;
    let mut tail = d * g_n + 0.5 * g_n;
    let mut deriv = g_n;
    for m in 1..=7usize {
        deriv *= -(1.0 + m as f64 * xi) / d;
        if m % 2 == 1 {
            tail -= EM_COEFFS[(m - 1) / 2] * deriv;
        }
    }
    direct + tail
}

/// Hurwitz zeta function `H(s, q) = Σ_{i>=0} (q + i)^(-s)` for s > 1, q > 0.
pub fn hurwitz_zeta(s: f64, q: f64) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return domain(format!("hurwitz_zeta: s must be > 1, got {s}"));
    }
    if !(q > 0.0) || !q.is_finite() {
        return domain(format!("hurwitz_zeta: q must be > 0, got {q}"));
    }
    let xi = 1.0 / (s - 1.0);
    let z = zipf_kernel_sum(q * xi, xi);
    Ok(z * (-s * q.ln()).exp())
}

/// Two-sided normal critical value `z_{(1+level)/2}`.
pub fn normal_critical_value(level: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&level) {
        return domain(format!("confidence level must lie in [0, 1), got {level}"));
    }
    Ok(std::f64::consts::SQRT_2 * statrs::function::erf::erf_inv(level))
}
