//! Peaks over threshold: threshold choice, exceedance extraction and
//! extrapolated tail probabilities with delta-method intervals.

use serde::{Deserialize, Serialize};

use crate::dist::{Family, Model};
use crate::error::{domain, Error, Result};
use crate::mle::{fd_step, normal_interval, Censor, FitResult, GroupedCounts};

/// Exceedances `x - u` of the observations `x >= u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceedanceSample {
    pub threshold: u64,
    pub exceedances: GroupedCounts,
    pub n_total: u64,
    /// Empirical `P(X >= u)`.
    pub p_u_hat: f64,
}

impl ExceedanceSample {
    pub fn n_exceed(&self) -> u64 {
        self.exceedances.total()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailOptions {
    pub level: f64,
    /// Add the binomial variance of `p_u_hat` to the delta-method variance.
    pub binomial: bool,
}

impl Default for TailOptions {
    fn default() -> Self {
        Self {
            level: 0.9,
            binomial: false,
        }
    }
}

/// Estimate of `P(X >= m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub m: u64,
    pub p_e_hat: f64,
    /// Delta-method standard error; NaN when the fit has no covariance.
    pub se: f64,
    /// Normal interval clamped to [0, 1]; `None` without a covariance.
    pub ci: Option<(f64, f64)>,
    pub method: Family,
}

fn order_index(n: u64, percentile: f64) -> Result<u64> {
    if !(percentile > 0.0 && percentile < 1.0) {
        return domain(format!("percentile must lie in (0, 1), got {percentile}"));
    }
    if n == 0 {
        return Err(Error::EmptyData);
    }
    // Guard against n·p landing a rounding error above an integer.
    let x = n as f64 * percentile;
    let k = (x - x * 1e-12).ceil() as u64;
    Ok(k.clamp(1, n))
}

/// The order statistic `x_(⌈n·percentile⌉)` (1-indexed, ascending).
pub fn select_threshold(data: &[u64], percentile: f64) -> Result<u64> {
    let k = order_index(data.len() as u64, percentile)?;
    let mut sorted = data.to_vec();
    let (_, nth, _) = sorted.select_nth_unstable((k - 1) as usize);
    Ok(*nth)
}

/// [`select_threshold`] on a frequency table. Fails if the order statistic
/// falls in the censored cell.
pub fn select_threshold_grouped(data: &GroupedCounts, percentile: f64) -> Result<u64> {
    let k = order_index(data.total(), percentile)?;
    let mut seen = 0;
    for (&v, &c) in data.cells() {
        seen += c;
        if seen >= k {
            return Ok(v);
        }
    }
    domain(format!(
        "the {percentile} quantile falls in the censored cell"
    ))
}

/// Exceedances above `u` of a raw integer sample.
pub fn exceedances(data: &[u64], u: u64) -> Result<ExceedanceSample> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let shifted: Vec<u64> = data.iter().filter(|&&x| x >= u).map(|&x| x - u).collect();
    if shifted.is_empty() {
        return Err(Error::NoExceedances(u));
    }
    let n_total = data.len() as u64;
    let n_exceed = shifted.len() as u64;
    Ok(ExceedanceSample {
        threshold: u,
        exceedances: GroupedCounts::from_values(&shifted),
        n_total,
        p_u_hat: n_exceed as f64 / n_total as f64,
    })
}

/// Exceedances above `u` of a frequency table. A censored cell carries over
/// shifted by `u`; it must not start below `u`, where its members could lie
/// on either side of the threshold.
pub fn exceedances_grouped(data: &GroupedCounts, u: u64) -> Result<ExceedanceSample> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let censor = match data.censor() {
        Some(c) if c.count > 0 && c.threshold < u => {
            return domain(format!(
                "threshold {u} lies above the censoring point {}",
                c.threshold
            ))
        }
        Some(c) => Some(Censor {
            threshold: c.threshold - u,
            count: c.count,
        }),
        None => None,
    };
    let cells = data.cells().range(u..).map(|(&v, &c)| (v - u, c));
    let ex = GroupedCounts::new(cells, censor)?;
    if ex.total() == 0 {
        return Err(Error::NoExceedances(u));
    }
    let n_total = data.total();
    Ok(ExceedanceSample {
        threshold: u,
        p_u_hat: ex.total() as f64 / n_total as f64,
        exceedances: ex,
        n_total,
    })
}

/// `P(X >= m) ≈ p_u_hat · S(m - u)` from a fit to the exceedances of `sample`.
pub fn tail_probability(
    fit: &FitResult,
    sample: &ExceedanceSample,
    m: u64,
    options: &TailOptions,
) -> Result<TailEstimate> {
    tail_probability_with(
        fit,
        sample.threshold,
        sample.p_u_hat,
        sample.n_total,
        m,
        options,
    )
}

/// [`tail_probability`] from the threshold summary alone, for fits whose
/// exceedances were not held as a [`GroupedCounts`] (continuous data).
///
/// `S` is the fitted exceedance survival evaluated at the integer gap
/// `m - u`; for the continuous GPD that is its survival at `m - u`
/// regardless of the shift used in fitting.
pub fn tail_probability_with(
    fit: &FitResult,
    threshold: u64,
    p_u_hat: f64,
    n_total: u64,
    m: u64,
    options: &TailOptions,
) -> Result<TailEstimate> {
    if m < threshold {
        return domain(format!("target {m} lies below the threshold {threshold}"));
    }
    if !(p_u_hat > 0.0 && p_u_hat <= 1.0) {
        return domain(format!("p_u_hat must lie in (0, 1], got {p_u_hat}"));
    }
    if fit.covariate_range.is_some() {
        return Err(Error::Unsupported(
            "tail probabilities for covariate fits".into(),
        ));
    }
    let gap = (m - threshold) as f64;
    let surv = |theta: &[f64]| -> Option<f64> {
        Model::from_family(fit.family, theta)
            .ok()
            .map(|model| model.survival(gap))
    };
    let s_hat = surv(&fit.estimates).ok_or_else(|| {
        Error::Domain(format!("fitted parameters {:?} are invalid", fit.estimates))
    })?;
    let p_e_hat = (p_u_hat * s_hat).clamp(0.0, 1.0);

    let (se, ci) = match &fit.covariance {
        None => (f64::NAN, None),
        Some(cov) => {
            let theta = &fit.estimates;
            let grad: Vec<f64> = (0..theta.len())
                .map(|j| {
                    let h = fd_step(theta[j]);
                    let at = |d: f64| {
                        let mut t = theta.clone();
                        t[j] += d;
                        surv(&t)
                    };
                    match (at(-h), at(h)) {
                        (Some(lo), Some(hi)) => (hi - lo) / (2.0 * h),
                        (None, Some(hi)) => (hi - s_hat) / h,
                        (Some(lo), None) => (s_hat - lo) / h,
                        (None, None) => f64::NAN,
                    }
                })
                .collect();
            let mut var_s = 0.0;
            for i in 0..grad.len() {
                for j in 0..grad.len() {
                    var_s += grad[i] * cov[(i, j)] * grad[j];
                }
            }
            let mut var = var_s.max(0.0) * p_u_hat * p_u_hat;
            if options.binomial {
                var += s_hat * s_hat * p_u_hat * (1.0 - p_u_hat) / n_total as f64;
            }
            let se = var.sqrt();
            let ci = if se.is_finite() {
                let (lo, hi) = normal_interval(p_e_hat, se, options.level)?;
                Some((lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0)))
            } else {
                None
            };
            (se, ci)
        }
    };
    Ok(TailEstimate {
        m,
        p_e_hat,
        se,
        ci,
        method: fit.family,
    })
}
