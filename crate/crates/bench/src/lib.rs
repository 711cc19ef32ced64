//! Shared inputs for the benchmarks under `benches/`.

use dextremes::{GroupedCounts, Model, RngStream, TailParams};

/// `n` draws of D-GPD(σ, ξ) as a frequency table.
pub fn dgpd_sample(n: usize, sigma: f64, xi: f64, seed: u64) -> GroupedCounts {
    let model = Model::dgpd(TailParams::new(sigma, xi).expect("valid parameters"));
    GroupedCounts::from_values(&model.sample_discrete(n, &mut RngStream::new(seed, 0)))
}
