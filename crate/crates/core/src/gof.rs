//! Goodness of fit for discrete data: Kolmogorov–Smirnov statistic with a
//! parametric-bootstrap p-value, and QQ points with simulation envelopes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::Model;
use crate::error::{domain, Error, Result};
use crate::mle::{fit, Censor, FitOptions, FitResult, GroupedCounts};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub mc_replicates: usize,
    pub refit: bool,
    /// Bootstrap refits that errored or did not converge. Errored refits fall
    /// back to the original fitted model for that replicate.
    pub failed_refits: usize,
}

/// `sup_k |F_n(k) - F(k)|` over the integers, where `F` is the model's cdf
/// of `⌊X⌋`. The supremum is attained at an observed value or at the
/// predecessor of one. A censored cell contributes its predecessor only.
pub fn ks_statistic(data: &GroupedCounts, model: &Model) -> Result<f64> {
    let n = data.total();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    let n = n as f64;
    let mut below = 0u64;
    let mut d: f64 = 0.0;
    let mut check = |k: u64, count_le: u64| {
        let diff = (count_le as f64 / n - model.discrete_cdf(k)).abs();
        d = d.max(diff);
    };
    for (&v, &c) in data.cells() {
        if v > 0 {
            check(v - 1, below);
        }
        below += c;
        check(v, below);
    }
    if let Some(cen) = data.censor().filter(|c| c.count > 0 && c.threshold > 0) {
        check(cen.threshold - 1, below);
    }
    Ok(d)
}

/// Bootstrap sample of size `n` from `model`, censored like `like`.
fn simulate_like(model: &Model, like: &GroupedCounts, rng: &mut RngStream) -> GroupedCounts {
    let n = like.total() as usize;
    let draws = model.sample_discrete(n, rng);
    match like.censor() {
        Some(c) if c.count > 0 => {
            let (kept, cut): (Vec<u64>, Vec<u64>) = draws.iter().partition(|&&x| x < c.threshold);
            let base = GroupedCounts::from_values(&kept);
            GroupedCounts::new(
                base.cells().iter().map(|(&v, &c)| (v, c)),
                Some(Censor {
                    threshold: c.threshold,
                    count: cut.len() as u64,
                }),
            )
            .expect("explicit values lie below the censor threshold")
        }
        _ => GroupedCounts::from_values(&draws),
    }
}

/// Monte Carlo p-value of the KS statistic, `(1 + #{D_b >= D_obs}) / (B + 1)`.
///
/// Replicate `b` draws from `rng.derive(b)`, so results do not depend on
/// thread scheduling. With `refit`, each replicate is refitted (from the
/// original estimates) before its statistic is computed, which accounts for
/// estimated parameters under the null.
pub fn ks_pvalue(
    data: &GroupedCounts,
    result: &FitResult,
    replicates: usize,
    refit: bool,
    rng: &RngStream,
) -> Result<KsResult> {
    if replicates == 0 {
        return domain("at least one bootstrap replicate is required");
    }
    let model = result.model()?;
    let d_obs = ks_statistic(data, &model)?;
    let options = FitOptions {
        start: Some(result.estimates.clone()),
        ..FitOptions::default()
    };
    let stats: Vec<(f64, bool)> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut r = rng.derive(b as u64);
            let sim = simulate_like(&model, data, &mut r);
            if !refit {
                let d = ks_statistic(&sim, &model).expect("nonempty sample");
                return (d, false);
            }
            match fit(result.family, &sim, &options).and_then(|f| Ok((f.model()?, f.converged))) {
                Ok((m, ok)) => (ks_statistic(&sim, &m).expect("nonempty sample"), !ok),
                Err(_) => (ks_statistic(&sim, &model).expect("nonempty sample"), true),
            }
        })
        .collect();
    // Allow for rounding in the comparison so that D_obs = 0 gives p = 1.
    let tol = 1e-12;
    let exceed = stats.iter().filter(|(d, _)| *d >= d_obs - tol).count();
    Ok(KsResult {
        statistic: d_obs,
        p_value: (1 + exceed) as f64 / (replicates + 1) as f64,
        mc_replicates: replicates,
        refit,
        failed_refits: stats.iter().filter(|(_, f)| *f).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    /// Plotting position `i / (n + 1)`.
    pub position: f64,
    pub empirical: f64,
    pub model: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqData {
    pub points: Vec<QqPoint>,
    /// Pointwise `(lower, upper)` bounds, one per point; `None` without
    /// simulations.
    pub envelope: Option<Vec<(f64, f64)>>,
    pub n_sims: usize,
    pub level: f64,
}

impl QqData {
    /// Fraction of points whose empirical quantile lies inside the envelope.
    pub fn inside_fraction(&self) -> Option<f64> {
        let env = self.envelope.as_ref()?;
        let inside = self
            .points
            .iter()
            .zip(env)
            .filter(|(p, (lo, hi))| *lo <= p.empirical && p.empirical <= *hi)
            .count();
        Some(inside as f64 / self.points.len() as f64)
    }
}

/// Sample quantile by linear interpolation between order statistics
/// (Hyndman–Fan type 7). `sorted` must be ascending and nonempty.
pub fn type7_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// QQ points of `data` against `model` at positions `i / (n + 1)`. Model
/// quantiles are continuous for the GPD and discrete otherwise. With
/// `n_sims > 0`, pointwise bounds at `level` come from that many sorted
/// samples of `⌊X⌋` of size `n` drawn from the model.
pub fn qq_points(
    data: &GroupedCounts,
    model: &Model,
    n_sims: usize,
    level: f64,
    rng: &RngStream,
) -> Result<QqData> {
    if !(level > 0.0 && level < 1.0) {
        return domain(format!("level must lie in (0, 1), got {level}"));
    }
    if data.censor().is_some_and(|c| c.count > 0) {
        return Err(Error::Unsupported("QQ points for censored data".into()));
    }
    let sorted = data.expand();
    let n = sorted.len();
    if n == 0 {
        return Err(Error::EmptyData);
    }
    let points = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let position = (i + 1) as f64 / (n + 1) as f64;
            Ok(QqPoint {
                position,
                empirical: x as f64,
                model: model.quantile(position)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let envelope = (n_sims > 0).then(|| {
        let sims: Vec<Vec<u64>> = (0..n_sims)
            .into_par_iter()
            .map(|s| {
                let mut r = rng.derive(s as u64);
                let mut v = model.sample_discrete(n, &mut r);
                v.sort_unstable();
                v
            })
            .collect();
        (0..n)
            .map(|i| {
                let mut col: Vec<f64> = sims.iter().map(|s| s[i] as f64).collect();
                col.sort_by(f64::total_cmp);
                (
                    type7_quantile(&col, (1.0 - level) / 2.0),
                    type7_quantile(&col, (1.0 + level) / 2.0),
                )
            })
            .collect()
    });
    Ok(QqData {
        points,
        envelope,
        n_sims,
        level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{Baseline, Family, TailParams};

    fn geometric(sigma: f64) -> Model {
        Model::from_family(Family::Geometric, &[sigma]).unwrap()
    }

    #[test]
    fn ks_hand_cases() {
        let half = Model::baseline(Baseline::Geometric { p: 0.5 }).unwrap();
        let one = GroupedCounts::from_values(&[0]);
        assert!((ks_statistic(&one, &half).unwrap() - 0.5).abs() < 1e-15);
        let two = GroupedCounts::from_values(&[0, 1]);
        assert!((ks_statistic(&two, &half).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(
            ks_statistic(&GroupedCounts::default(), &half),
            Err(Error::EmptyData)
        );
    }

    #[test]
    fn ks_zero_on_exact_match() {
        // Geometric(1/2) masses 1/2, 1/4, 1/8, 1/8 (tail) fit 8 points exactly
        // up to the last observed value.
        let half = Model::baseline(Baseline::Geometric { p: 0.5 }).unwrap();
        let g = GroupedCounts::new(
            [(0, 4), (1, 2), (2, 1)],
            Some(Censor {
                threshold: 3,
                count: 1,
            }),
        )
        .unwrap();
        assert_eq!(ks_statistic(&g, &half).unwrap(), 0.0);
    }

    #[test]
    fn ks_invariant_to_regrouping() {
        let m = geometric(2.0);
        let a = GroupedCounts::from_values(&[0, 3, 3, 1, 7, 0]);
        let b = GroupedCounts::new([(3, 1), (0, 2), (7, 1), (1, 1), (3, 1)], None).unwrap();
        assert_eq!(ks_statistic(&a, &m).unwrap(), ks_statistic(&b, &m).unwrap());
    }

    #[test]
    fn pvalue_reproducible_and_bounded() {
        let mut rng = RngStream::new(21, 0);
        let m = Model::dgpd(TailParams::new(1.5, 0.3).unwrap());
        let g = GroupedCounts::from_values(&m.sample_discrete(300, &mut rng));
        let f = fit(Family::Dgpd, &g, &FitOptions::default()).unwrap();
        let stream = RngStream::new(99, 3);
        let a = ks_pvalue(&g, &f, 40, true, &stream).unwrap();
        let b = ks_pvalue(&g, &f, 40, true, &stream).unwrap();
        assert_eq!(a, b);
        assert!(a.p_value > 0.0 && a.p_value <= 1.0);
        assert_eq!(a.mc_replicates, 40);
        let fixed = ks_pvalue(&g, &f, 40, false, &stream).unwrap();
        assert!(!fixed.refit && fixed.failed_refits == 0);
        assert!(ks_pvalue(&g, &f, 0, true, &stream).is_err());
    }

    #[test]
    fn pvalue_is_one_for_perfect_match() {
        let g = GroupedCounts::new([(0, 4), (1, 2), (2, 1), (3, 1)], None).unwrap();
        let mut f = fit(Family::Geometric, &g, &FitOptions::default()).unwrap();
        // Force the fitted law to the one that matches the data at 0..2.
        f.estimates = vec![1.0 / 2f64.ln()];
        let m = f.model().unwrap();
        let g = GroupedCounts::new(
            [(0, 4), (1, 2), (2, 1)],
            Some(Censor {
                threshold: 3,
                count: 1,
            }),
        )
        .unwrap();
        assert!(ks_statistic(&g, &m).unwrap() < 1e-15);
        let r = ks_pvalue(&g, &f, 25, false, &RngStream::new(1, 1)).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn qq_geometric_quantiles() {
        let g = GroupedCounts::from_values(&[0, 0, 1, 4]);
        let q = qq_points(&g, &geometric(1.0), 0, 0.9, &RngStream::new(0, 0)).unwrap();
        let model: Vec<f64> = q.points.iter().map(|p| p.model).collect();
        assert_eq!(model, vec![0.0, 0.0, 0.0, 1.0]);
        let pos: Vec<f64> = q.points.iter().map(|p| p.position).collect();
        assert_eq!(pos, vec![0.2, 0.4, 0.6, 0.8]);
        assert!(q.envelope.is_none());
        assert!(qq_points(&g, &geometric(1.0), 0, 1.0, &RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn qq_envelope_is_ordered_and_reproducible() {
        let mut rng = RngStream::new(6, 0);
        let m = Model::dgpd(TailParams::new(1.2, 0.4).unwrap());
        let g = GroupedCounts::from_values(&m.sample_discrete(200, &mut rng));
        let a = qq_points(&g, &m, 300, 0.9, &RngStream::new(7, 0)).unwrap();
        let b = qq_points(&g, &m, 300, 0.9, &RngStream::new(7, 0)).unwrap();
        assert_eq!(a, b);
        let env = a.envelope.as_ref().unwrap();
        assert_eq!(env.len(), 200);
        assert!(env.iter().all(|(lo, hi)| lo <= hi));
        assert!(env.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        assert!(a.inside_fraction().unwrap() >= 0.8);
    }

    #[test]
    fn type7_matches_definition() {
        let v = [1.0, 2.0, 4.0, 8.0];
        assert_eq!(type7_quantile(&v, 0.0), 1.0);
        assert_eq!(type7_quantile(&v, 1.0), 8.0);
        assert!((type7_quantile(&v, 0.5) - 3.0).abs() < 1e-15);
        assert!((type7_quantile(&v, 0.05) - 1.15).abs() < 1e-12);
    }
}
