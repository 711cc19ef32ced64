use dextremes::dist::{
    dgpd_pmf, dgpd_survival, gpd_density, gzd_pmf, gzd_survival, Baseline, Model,
};
use dextremes::gof::{ks_statistic, qq_points};
use dextremes::mle::{fit, nll, Censor, FitOptions, GroupedCounts};
use dextremes::pot::{exceedances, tail_probability_with, TailOptions};
use dextremes::replication::{poisson_intro_experiment, table1_experiment};
use dextremes::{Family, RngStream, TailParams};
use proptest::prelude::*;

const SIGMAS: [f64; 4] = [0.3, 1.0, 5.0, 22.0];
const XIS: [f64; 4] = [0.0, 0.06, 0.5, 0.88];

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
}

#[test]
fn pmfs_sum_to_one() {
    let k_max = 10_000u64;
    for sigma in SIGMAS {
        for xi in XIS {
            let p = TailParams::new(sigma, xi).unwrap();
            let mut models = vec![Model::dgpd(p), Model::gzd(p)];
            if xi == 0.0 {
                models.push(Model::from_family(Family::Geometric, &[sigma]).unwrap());
            }
            for m in models {
                // Smallest terms first.
                let mut total = m.survival((k_max + 1) as f64);
                for k in (0..=k_max).rev() {
                    total += m.ln_likelihood_term(k as f64).exp();
                }
                assert!(
                    (total - 1.0).abs() < 1e-10,
                    "{:?} sigma={sigma} xi={xi}: {total}",
                    m.family()
                );
            }
        }
    }
}

/// Hurwitz zeta by plain summation of 2000 terms plus the integral and first
/// two Euler–Maclaurin corrections.
fn hurwitz_oracle(s: f64, q: f64) -> f64 {
    let n = 2000;
    let mut sum = 0.0;
    for i in (0..n).rev() {
        sum += (q + i as f64).powf(-s);
    }
    let a = q + n as f64;
    sum + a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s) + s * a.powf(-s - 1.0) / 12.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dgpd_telescopes(sigma in 0.05f64..100.0, xi in 0.0f64..3.0, k in 0u64..1_000_000) {
        let p = TailParams::new(sigma, xi).unwrap();
        let upper = dgpd_survival(k, p);
        let diff = upper - dgpd_survival(k + 1, p);
        // Each survival is exp of a log, so carries relative error of order
        // ε·|ln S|; the subtraction adds an ulp of S(k).
        let tol = 4.0 * f64::EPSILON * (upper.ln().abs() + 1.0) * upper;
        prop_assert!((dgpd_pmf(k, p) - diff).abs() <= tol);
    }

    #[test]
    fn gzd_telescopes(sigma in 0.05f64..100.0, xi in 0.0f64..3.0, k in 0u64..100_000) {
        let p = TailParams::new(sigma, xi).unwrap();
        let upper = gzd_survival(k, p);
        let diff = upper - gzd_survival(k + 1, p);
        prop_assert!((gzd_pmf(k, p) - diff).abs() <= 1e-13 * upper);
    }

    #[test]
    fn zero_shape_families_coincide(sigma in 0.3f64..1e3, k in 0u64..=200) {
        let p = TailParams::new(sigma, 0.0).unwrap();
        let geo = Model::from_family(Family::Geometric, &[sigma]).unwrap();
        let g = geo.ln_likelihood_term(k as f64).exp();
        // Rounding of the exponent -k/σ is the only source of disagreement.
        let tol = 1e-14 + 4.0 * f64::EPSILON * k as f64 / sigma;
        prop_assert!(((dgpd_pmf(k, p) - g) / g).abs() <= tol);
        prop_assert!(((gzd_pmf(k, p) - g) / g).abs() <= tol);
    }

    #[test]
    fn gzd_is_zipf_mandelbrot(sigma in 0.1f64..50.0, xi in 0.05f64..2.0, k in 0u64..1000) {
        let p = TailParams::new(sigma, xi).unwrap();
        let (s, q) = (1.0 + 1.0 / xi, sigma / xi);
        let exact = -s * (k as f64 + q).ln() - hurwitz_oracle(s, q).ln();
        prop_assert!((gzd_pmf(k, p).ln() - exact).abs() < 1e-12);
    }

    #[test]
    fn grouped_and_raw_nll_agree(
        values in prop::collection::vec(0u64..40, 1..60),
        sigma in 0.1f64..10.0,
        xi in 0.0f64..2.0,
    ) {
        let grouped = GroupedCounts::from_values(&values);
        let raw: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        let opts = FitOptions::default();
        for family in [Family::Dgpd, Family::Gzd, Family::Gpd { delta: 0.5 }] {
            let a = nll(family, &[sigma, xi], &grouped, &opts).unwrap();
            let b = nll(family, &[sigma, xi], &raw, &opts).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{family:?}: {a} vs {b}");
        }
    }

    #[test]
    fn empty_censor_changes_nothing(
        values in prop::collection::vec(0u64..40, 1..60),
        sigma in 0.1f64..10.0,
        xi in 0.0f64..2.0,
    ) {
        let plain = GroupedCounts::from_values(&values);
        let censored = GroupedCounts::new(
            plain.cells().iter().map(|(&v, &c)| (v, c)),
            Some(Censor { threshold: 50, count: 0 }),
        )
        .unwrap();
        let opts = FitOptions::default();
        for family in [Family::Dgpd, Family::Gzd] {
            let a = nll(family, &[sigma, xi], &plain, &opts).unwrap();
            let b = nll(family, &[sigma, xi], &censored, &opts).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn information_criteria_identities(values in prop::collection::vec(0u64..30, 2..40)) {
        let data = GroupedCounts::from_values(&values);
        for family in [Family::Dgpd, Family::Gzd, Family::Geometric] {
            let f = fit(family, &data, &FitOptions::default()).unwrap();
            let k = f.k() as f64;
            prop_assert_eq!(f.aic, 2.0 * k + 2.0 * f.nll);
            prop_assert_eq!(f.bic, k * (f.n as f64).ln() + 2.0 * f.nll);
            prop_assert_eq!(f.n, values.len() as u64);
        }
    }

    #[test]
    fn tail_probability_non_increasing(seed in 0u64..1000) {
        let truth = Model::dgpd(TailParams::new(2.0, 0.4).unwrap());
        let x = truth.sample_discrete(300, &mut RngStream::new(seed, 0));
        let ex = exceedances(&x, 0).unwrap();
        let f = fit(Family::Dgpd, &ex.exceedances, &FitOptions::default()).unwrap();
        let opts = TailOptions::default();
        let mut prev = f64::INFINITY;
        for m in [0u64, 1, 2, 5, 10, 50, 100, 1000] {
            let t = tail_probability_with(&f, 0, ex.p_u_hat, ex.n_total, m, &opts).unwrap();
            prop_assert!(t.p_e_hat <= prev && (0.0..=1.0).contains(&t.p_e_hat));
            if let Some((lo, hi)) = t.ci {
                prop_assert!((0.0..=1.0).contains(&lo) && lo <= hi && hi <= 1.0);
            }
            prev = t.p_e_hat;
        }
    }
}

#[test]
fn continuity_correction_expansion() {
    let xi = 0.5;
    let ratio = |sigma: f64, k: u64, delta: f64| {
        let p = TailParams::new(sigma, xi).unwrap();
        dgpd_pmf(k, p) / gpd_density(k as f64, p, delta).unwrap()
    };
    let first_order =
        |sigma: f64, delta: f64| 1.0 + (1.0 + xi) * (2.0 * delta - 1.0) / (2.0 * sigma);
    // Half-unit shift: the first-order term vanishes.
    for k in 0..=100u64 {
        let r = ratio(100.0, k, 0.5);
        assert!((r - 1.0).abs() < 5e-4, "k={k}: {r}");
    }
    // No shift: the expansion holds for fixed k as σ grows. Its error at k is
    // about (1 + ξ)ξk / (2σ²), so at σ = 100 it stays under 5e-4 up to k = 12.
    for k in 0..=12u64 {
        let r = ratio(100.0, k, 0.0);
        assert!((r - first_order(100.0, 0.0)).abs() < 5e-4, "k={k}: {r}");
    }
    for k in 0..=100u64 {
        let err = |sigma: f64| (ratio(sigma, k, 0.0) - first_order(sigma, 0.0)).abs();
        let (e2, e3, e4) = (err(1e2), err(1e3), err(1e4));
        assert!(e3 < e2 / 50.0 && e4 < e3 / 50.0, "k={k}: {e2} {e3} {e4}");
    }
}

#[test]
fn discrete_quantiles_are_minimal() {
    let mut models = Vec::new();
    for sigma in SIGMAS {
        for xi in XIS {
            let p = TailParams::new(sigma, xi).unwrap();
            models.push(Model::dgpd(p));
            models.push(Model::gzd(p));
        }
        models.push(Model::from_family(Family::Geometric, &[sigma]).unwrap());
    }
    for b in [
        Baseline::Poisson { lambda: 0.7 },
        Baseline::Poisson { lambda: 25.0 },
        Baseline::NegBinomial { r: 2.5, p: 0.3 },
        Baseline::Geometric { p: 0.2 },
    ] {
        models.push(Model::baseline(b).unwrap());
    }
    for m in &models {
        for i in 1..=1000 {
            let u = i as f64 / 1001.0;
            let q = m.discrete_quantile(u).unwrap();
            assert!(m.discrete_cdf(q) >= u, "{:?} u={u} q={q}", m.family());
            if q > 0 {
                assert!(m.discrete_cdf(q - 1) < u, "{:?} u={u} q={q}", m.family());
            }
        }
    }
}

#[test]
fn shape_estimates_stable_across_thresholds() {
    // Above any threshold, exceedances of a D-GPD are again D-GPD with the
    // same shape.
    let truth = Model::dgpd(TailParams::new(2.0, 0.3).unwrap());
    let rng = RngStream::new(99, 1);
    let runs = 50;
    let (mut diff, mut var) = (0.0, 0.0);
    for r in 0..runs {
        let x = truth.sample_discrete(5000, &mut rng.derive(r));
        let fits: Vec<_> = [2u64, 6]
            .iter()
            .map(|&u| {
                let ex = exceedances(&x, u).unwrap();
                fit(Family::Dgpd, &ex.exceedances, &FitOptions::default()).unwrap()
            })
            .collect();
        let se = |i: usize| fits[i].std_errors().unwrap()[1];
        diff += fits[1].estimates[1] - fits[0].estimates[1];
        var += se(0).powi(2) + se(1).powi(2);
    }
    let mean_diff = diff / runs as f64;
    let combined = (var / runs as f64).sqrt() / (runs as f64).sqrt();
    assert!(
        mean_diff.abs() < 3.0 * combined,
        "{mean_diff} vs {combined}"
    );
}

#[test]
fn median_ks_shrinks_with_n() {
    let truth = Model::dgpd(TailParams::new(1.19, 0.49).unwrap());
    let rng = RngStream::new(5, 2);
    let median_ks = |n: usize| {
        let mut d: Vec<f64> = (0..21)
            .map(|s| {
                let x = truth.sample_discrete(n, &mut rng.derive(s * 10 + n as u64));
                ks_statistic(&GroupedCounts::from_values(&x), &truth).unwrap()
            })
            .collect();
        d.sort_by(f64::total_cmp);
        d[10]
    };
    let (a, b, c) = (median_ks(100), median_ks(1000), median_ks(10_000));
    assert!(a > b && b > c, "{a} {b} {c}");
}

#[test]
fn qq_envelope_calibration() {
    let truth = Model::dgpd(TailParams::new(1.19, 0.49).unwrap());
    let rng = RngStream::new(11, 3);
    let runs = 20;
    let inside: f64 = (0..runs)
        .map(|s| {
            let r = rng.derive(s);
            let x = truth.sample_discrete(500, &mut r.derive(0));
            let q = qq_points(
                &GroupedCounts::from_values(&x),
                &truth,
                500,
                0.9,
                &r.derive(1),
            )
            .unwrap();
            q.inside_fraction().unwrap()
        })
        .sum::<f64>()
        / runs as f64;
    assert!(inside >= 0.8, "{inside}");
}

#[test]
fn correctly_specified_coverage() {
    let truth_params = TailParams::new(1.19, 0.49).unwrap();
    let truth = Model::dgpd(truth_params);
    let m = 50;
    let p_e = dgpd_survival(m, truth_params);
    let rng = RngStream::new(2024, 4);
    let reps = 200;
    let opts = TailOptions::default();
    let covered = (0..reps)
        .filter(|&r| {
            let x = truth.sample_discrete(1000, &mut rng.derive(r));
            let ex = exceedances(&x, 0).unwrap();
            let f = fit(Family::Dgpd, &ex.exceedances, &FitOptions::default()).unwrap();
            let t = tail_probability_with(&f, 0, 1.0, ex.n_total, m, &opts).unwrap();
            let (lo, hi) = t.ci.unwrap();
            lo <= p_e && p_e <= hi
        })
        .count();
    let coverage = covered as f64 / reps as f64;
    assert!((0.78..=0.95).contains(&coverage), "{coverage}");
}

#[test]
fn poisson_scales_converge_with_rate() {
    // Relative spread of the three mean scales.
    let spread = |lambda: f64| {
        let u = (lambda + 2.0 * lambda.sqrt()).round() as u64;
        let s = poisson_intro_experiment(5000, lambda, u, 20, &RngStream::new(7, 0)).unwrap();
        let sig: Vec<f64> = ["gpd", "dgpd", "gzd"]
            .iter()
            .map(|m| s.mean_sigma(m).unwrap())
            .collect();
        let max = sig.iter().cloned().fold(f64::MIN, f64::max);
        let min = sig.iter().cloned().fold(f64::MAX, f64::min);
        (max - min) / max
    };
    let (a, b, c) = (spread(1.0), spread(5.0), spread(20.0));
    assert!(a > b && b > c, "{a} {b} {c}");
}

#[test]
fn table1_independent_of_thread_count() {
    let rng = RngStream::new(3, 0);
    let serial = pool(1).install(|| table1_experiment(8, 2000, 0.95, &rng).unwrap());
    let parallel = pool(4).install(|| table1_experiment(8, 2000, 0.95, &rng).unwrap());
    // Debug output compares NaN fields as equal and prints shortest round-trip
    // forms, so equal strings mean equal bits.
    assert_eq!(format!("{serial:?}"), format!("{parallel:?}"));
}

#[test]
fn pvalues_independent_of_thread_count() {
    let truth = Model::dgpd(TailParams::new(1.19, 0.49).unwrap());
    let x = truth.sample_discrete(200, &mut RngStream::new(8, 0));
    let data = GroupedCounts::from_values(&x);
    let f = fit(Family::Dgpd, &data, &FitOptions::default()).unwrap();
    let rng = RngStream::new(8, 1);
    let run = |t| pool(t).install(|| dextremes::gof::ks_pvalue(&data, &f, 50, true, &rng).unwrap());
    assert_eq!(run(1), run(4));
}
