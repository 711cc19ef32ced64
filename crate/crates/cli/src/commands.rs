use clap::{ArgGroup, Args, ValueEnum};
use dextremes::gof::{ks_pvalue, qq_points};
use dextremes::mle::normal_interval;
use dextremes::pot::{exceedances_grouped, select_threshold_grouped, tail_probability};
use dextremes::replication::{
    births_analysis, poisson_intro_experiment, table1_experiment, theorem1_ratio_check,
    BirthsFixture,
};
use dextremes::{ExceedanceSample, Family, FitOptions, FitResult, RngStream, TailOptions};
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::input::{parse_covariate, parse_dataset, read_source, Format};

pub const SCHEMA: &str = "1";
const CI_LEVEL: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Gpd,
    Dgpd,
    Gzd,
    Geometric,
    Poisson,
    Negbin,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("thresh").required(true).args(["threshold", "threshold_quantile"])))]
pub struct ModelArgs {
    /// Data file, or "-" for standard input.
    #[arg(long)]
    pub input: String,
    #[arg(long, value_enum, default_value_t = Format::Raw)]
    pub format: Format,
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Continuity shift for the GPD, in [0, 1).
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub threshold: Option<u64>,
    /// Threshold as an empirical quantile of the data, in (0, 1).
    #[arg(long)]
    pub threshold_quantile: Option<f64>,
    /// One covariate value per observation (raw format only); fits a scale
    /// linear in the covariate.
    #[arg(long)]
    pub covariate: Option<String>,
}

/// Data, threshold summary and fit shared by `fit` and `qq`.
pub struct Prepared {
    pub family: Family,
    pub sample: ExceedanceSample,
    pub fit: FitResult,
}

fn family(args: &ModelArgs) -> Result<Family, CliError> {
    if args.delta.is_some() && args.family != FamilyArg::Gpd {
        return Err(CliError::Usage(
            "--delta applies to --family gpd only".into(),
        ));
    }
    let f = match args.family {
        FamilyArg::Gpd => Family::Gpd {
            delta: args.delta.unwrap_or(0.0),
        },
        FamilyArg::Dgpd => Family::Dgpd,
        FamilyArg::Gzd => Family::Gzd,
        FamilyArg::Geometric => Family::Geometric,
        FamilyArg::Poisson => Family::Poisson,
        FamilyArg::Negbin => Family::NegBinomial,
    };
    f.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(f)
}

pub fn prepare(args: &ModelArgs) -> Result<Prepared, CliError> {
    let family = family(args)?;
    if let Some(p) = args.threshold_quantile {
        if !(p > 0.0 && p < 1.0) {
            return Err(CliError::Usage(format!(
                "--threshold-quantile must lie in (0, 1), got {p}"
            )));
        }
    }
    if args.covariate.is_some() && args.format != Format::Raw {
        return Err(CliError::Usage("--covariate needs --format raw".into()));
    }
    let dataset = parse_dataset(&read_source(&args.input)?, args.format, &args.input)?;
    let u = match (args.threshold, args.threshold_quantile) {
        (Some(u), _) => u,
        (None, Some(p)) => select_threshold_grouped(&dataset.counts, p)?,
        (None, None) => unreachable!("clap requires one threshold flag"),
    };
    let sample = exceedances_grouped(&dataset.counts, u)?;

    let fit = match &args.covariate {
        None => dextremes::fit(family, &sample.exceedances, &FitOptions::default())?,
        Some(path) => {
            let cov = parse_covariate(&read_source(path)?, path)?;
            let raw = dataset.raw.as_ref().expect("raw format keeps observations");
            if cov.len() != raw.len() {
                return Err(CliError::Input(format!(
                    "{path}: {} covariate values for {} observations",
                    cov.len(),
                    raw.len()
                )));
            }
            let (x, c): (Vec<f64>, Vec<f64>) = raw
                .iter()
                .zip(&cov)
                .filter(|(&x, _)| x >= u)
                .map(|(&x, &c)| ((x - u) as f64, c))
                .unzip();
            let options = FitOptions {
                covariate: Some(c),
                ..FitOptions::default()
            };
            dextremes::fit(family, &x, &options)?
        }
    };
    Ok(Prepared {
        family,
        sample,
        fit,
    })
}

fn json_name(name: &str) -> &str {
    // The baseline scale of a trend model is reported as "sigma".
    if name == "sigma0" {
        "sigma"
    } else {
        name
    }
}

/// Report body common to every fit: estimates, standard errors, 90%
/// intervals and information criteria.
pub fn fit_report(p: &Prepared) -> Value {
    let f = &p.fit;
    let se = f.std_errors();
    let mut estimates = Map::new();
    let mut ses = Map::new();
    let mut cis = Map::new();
    for (i, name) in f.names.iter().enumerate() {
        let key = json_name(name).to_string();
        estimates.insert(key.clone(), json!(f.estimates[i]));
        let s = se.as_ref().map(|s| s[i]);
        ses.insert(key.clone(), json!(s));
        let ci = s.and_then(|s| normal_interval(f.estimates[i], s, CI_LEVEL).ok());
        cis.insert(key, json!(ci.map(|(lo, hi)| [lo, hi])));
    }
    let delta = match p.family {
        Family::Gpd { delta } => json!(delta),
        _ => Value::Null,
    };
    let mut report = json!({
        "schema": SCHEMA,
        "family": p.family.name(),
        "delta": delta,
        "threshold": p.sample.threshold,
        "n_total": p.sample.n_total,
        "n_exceed": p.sample.n_exceed(),
        "estimates": estimates,
        "se": ses,
        "ci90": cis,
        "nll": f.nll,
        "aic": f.aic,
        "bic": f.bic,
        "converged": f.converged,
        "diagnostics": {
            "iterations": f.iterations,
            "boundary": f.boundary,
            "degenerate": f.degenerate,
            "one_sided_hessian": f.one_sided_hessian,
            "covariance_error": f.covariance_error,
        },
    });
    if let Some((lo, hi)) = f.covariate_range {
        report["covariate_range"] = json!([lo, hi]);
    }
    report
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Estimate P(X >= m) for this m.
    #[arg(long)]
    pub tail_at: Option<u64>,
    /// Kolmogorov–Smirnov test with this many bootstrap replicates.
    #[arg(long)]
    pub gof: Option<usize>,
    /// Keep the fitted parameters inside the bootstrap instead of refitting.
    #[arg(long)]
    pub no_refit: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Returns the report and whether the fit converged.
pub fn cmd_fit(args: &FitArgs) -> Result<(String, bool), CliError> {
    let trend = args.model.covariate.is_some();
    if trend && (args.tail_at.is_some() || args.gof.is_some()) {
        return Err(CliError::Usage(
            "--tail-at and --gof are not available with --covariate".into(),
        ));
    }
    if args.gof == Some(0) {
        return Err(CliError::Usage("--gof needs at least one replicate".into()));
    }
    let p = prepare(&args.model)?;
    if let Some(m) = args.tail_at {
        if m < p.sample.threshold {
            return Err(CliError::Usage(format!(
                "--tail-at {m} lies below the threshold {}",
                p.sample.threshold
            )));
        }
    }
    let mut report = fit_report(&p);
    if let Some(m) = args.tail_at {
        let t = tail_probability(&p.fit, &p.sample, m, &TailOptions::default())?;
        report["tail"] = json!({
            "m": t.m,
            "p_e": t.p_e_hat,
            "se": t.se,
            "ci": t.ci.map(|(lo, hi)| [lo, hi]),
        });
    }
    if let Some(b) = args.gof {
        let ks = ks_pvalue(
            &p.sample.exceedances,
            &p.fit,
            b,
            !args.no_refit,
            &RngStream::new(args.seed, 0),
        )?;
        report["gof"] = json!({
            "ks_stat": ks.statistic,
            "p_value": ks.p_value,
            "B": ks.mc_replicates,
            "refit": ks.refit,
            "failed_refits": ks.failed_refits,
        });
    }
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    Ok((text, p.fit.converged))
}

#[derive(Debug, Args)]
pub struct QqArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Simulated samples for the pointwise envelope; 0 for none.
    #[arg(long, default_value_t = 2000)]
    pub sims: usize,
    #[arg(long, default_value_t = 0.9)]
    pub level: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

pub fn cmd_qq(args: &QqArgs) -> Result<(String, bool), CliError> {
    if args.model.covariate.is_some() {
        return Err(CliError::Usage(
            "qq is not available with --covariate".into(),
        ));
    }
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::Usage(format!(
            "--level must lie in (0, 1), got {}",
            args.level
        )));
    }
    let p = prepare(&args.model)?;
    let q = qq_points(
        &p.sample.exceedances,
        &p.fit.model()?,
        args.sims,
        args.level,
        &RngStream::new(args.seed, 1),
    )?;
    let mut out = String::new();
    match &q.envelope {
        None => {
            out.push_str("position,empirical,model\n");
            for pt in &q.points {
                out.push_str(&format!("{},{},{}\n", pt.position, pt.empirical, pt.model));
            }
        }
        Some(env) => {
            out.push_str("position,empirical,model,lo,hi\n");
            for (pt, (lo, hi)) in q.points.iter().zip(env) {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    pt.position, pt.empirical, pt.model, lo, hi
                ));
            }
        }
    }
    Ok((out, p.fit.converged))
}

fn usage(e: dextremes::Error) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn replicate_table1(
    reps: usize,
    n: usize,
    percentile: f64,
    seed: u64,
    as_json: bool,
) -> Result<String, CliError> {
    let s = table1_experiment(reps, n, percentile, &RngStream::new(seed, 0)).map_err(usage)?;
    Ok(if as_json {
        let mut v = serde_json::to_value(&s).expect("summary serializes");
        v["schema"] = json!(SCHEMA);
        serde_json::to_string_pretty(&v).expect("summary serializes")
    } else {
        s.to_csv()
    })
}

pub fn replicate_poisson_intro(
    n: usize,
    lambda: f64,
    u: u64,
    seeds: usize,
    seed: u64,
) -> Result<String, CliError> {
    let s =
        poisson_intro_experiment(n, lambda, u, seeds, &RngStream::new(seed, 0)).map_err(usage)?;
    let mut v = serde_json::to_value(&s).expect("summary serializes");
    v["schema"] = json!(SCHEMA);
    Ok(serde_json::to_string_pretty(&v).expect("summary serializes"))
}

pub fn replicate_births() -> Result<String, CliError> {
    let a = births_analysis()?;
    let v = json!({
        "schema": SCHEMA,
        "n_births": BirthsFixture::total(),
        "threshold": a.sample.threshold,
        "n_exceed": a.sample.n_exceed(),
        "rows": a.rows(),
    });
    Ok(serde_json::to_string_pretty(&v).expect("table serializes"))
}

pub fn replicate_theorem1(s: f64, u: u64, k_max: u64) -> Result<String, CliError> {
    let d = theorem1_ratio_check(s, u, k_max).map_err(usage)?;
    let v = json!({ "schema": SCHEMA, "s": s, "u": u, "k_max": k_max, "deviation": d });
    Ok(serde_json::to_string_pretty(&v).expect("scalar serializes"))
}
