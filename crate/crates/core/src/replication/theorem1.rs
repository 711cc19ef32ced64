use crate::dist::{gzd_pmf, TailParams};
use crate::error::{domain, Result};
use crate::special::hurwitz_zeta;

/// For X Zipf–Mandelbrot with exponent `s` and offset 1 (`P(X = k) ∝
/// (1 + k)^-s`, k >= 0), the largest deviation from one of
/// `P(X = k + u | X >= u) / p_GZD(k; ξu, ξ)` over `k <= k_max`, with
/// ξ = 1/(s - 1). The conditional law is computed from exact Hurwitz zeta
/// tail sums.
pub fn theorem1_ratio_check(s: f64, u: u64, k_max: u64) -> Result<f64> {
    if !(s > 1.0) || !s.is_finite() {
        return domain(format!("exponent must be finite and > 1, got {s}"));
    }
    if u == 0 {
        return domain("threshold must be >= 1");
    }
    let xi = 1.0 / (s - 1.0);
    let params = TailParams::new(xi * u as f64, xi)?;
    let ln_tail = hurwitz_zeta(s, 1.0 + u as f64)?.ln();
    let mut worst: f64 = 0.0;
    for k in 0..=k_max {
        let exact = -s * (1.0 + (k + u) as f64).ln() - ln_tail;
        let ratio = (exact - gzd_pmf(k, params).ln()).exp();
        worst = worst.max((ratio - 1.0).abs());
    }
    Ok(worst)
}
