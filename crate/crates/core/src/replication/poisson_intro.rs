use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{Baseline, Family, Model};
use crate::error::{domain, Result};
use crate::gof::{qq_points, QqData};
use crate::mle::{fit, FitOptions, FitResult, GroupedCounts};
use crate::pot::exceedances;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyMeans {
    pub method: String,
    pub mean_sigma: f64,
    pub mean_xi: f64,
    pub not_converged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonIntroSummary {
    pub n: usize,
    pub lambda: f64,
    pub threshold: u64,
    pub seeds: usize,
    pub families: Vec<FamilyMeans>,
    /// QQ points (no envelope) for each family on the first dataset.
    pub qq: Vec<(String, QqData)>,
}

impl PoissonIntroSummary {
    pub fn mean_sigma(&self, method: &str) -> Option<f64> {
        self.families
            .iter()
            .find(|f| f.method == method)
            .map(|f| f.mean_sigma)
    }
}

const METHODS: [&str; 3] = ["gpd", "dgpd", "gzd"];

struct SeedFits {
    fits: [FitResult; 3],
    data: [GroupedCounts; 3],
}

fn fit_one(n: usize, lambda: f64, u: u64, rng: &mut RngStream) -> Result<SeedFits> {
    let poisson = Model::baseline(Baseline::Poisson { lambda })?;
    let x = poisson.sample_discrete(n, rng);
    let ex = exceedances(&x, u)?;
    // The continuous GPD is fitted to the strict exceedances x - u, x > u,
    // with the shape left free.
    let strict: Vec<u64> = x.iter().filter(|&&v| v > u).map(|&v| v - u).collect();
    let strict = GroupedCounts::from_values(&strict);
    let opts = FitOptions::default();
    let gpd = fit(Family::Gpd { delta: 0.0 }, &strict, &opts)?;
    let dgpd = fit(Family::Dgpd, &ex.exceedances, &opts)?;
    let gzd = fit(Family::Gzd, &ex.exceedances, &opts)?;
    Ok(SeedFits {
        fits: [gpd, dgpd, gzd],
        data: [strict, ex.exceedances.clone(), ex.exceedances],
    })
}

/// Fits the GPD, D-GPD and GZD to exceedances of `seeds` Poisson(λ) samples
/// of size `n` above `u`, and averages the estimates. Dataset `s` uses
/// `rng.derive(s)`.
pub fn poisson_intro_experiment(
    n: usize,
    lambda: f64,
    u: u64,
    seeds: usize,
    rng: &RngStream,
) -> Result<PoissonIntroSummary> {
    if n < 100 {
        return domain(format!("need n >= 100, got {n}"));
    }
    if seeds == 0 {
        return domain("need at least one seed");
    }
    let runs = (0..seeds)
        .into_par_iter()
        .map(|s| fit_one(n, lambda, u, &mut rng.derive(s as u64)))
        .collect::<Result<Vec<_>>>()?;

    let families = METHODS
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let k = runs.len() as f64;
            FamilyMeans {
                method: name.to_string(),
                mean_sigma: runs.iter().map(|r| r.fits[i].estimates[0]).sum::<f64>() / k,
                mean_xi: runs.iter().map(|r| r.fits[i].estimates[1]).sum::<f64>() / k,
                not_converged: runs.iter().filter(|r| !r.fits[i].converged).count(),
            }
        })
        .collect();
    let first = &runs[0];
    let qq = METHODS
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let model = first.fits[i].model()?;
            let q = qq_points(&first.data[i], &model, 0, 0.9, rng)?;
            Ok((name.to_string(), q))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PoissonIntroSummary {
        n,
        lambda,
        threshold: u,
        seeds,
        families,
        qq,
    })
}
