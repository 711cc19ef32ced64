//! Command-line front end: fitting, QQ data and the scripted studies.

mod commands;
mod error;
mod input;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{FitArgs, QqArgs};
use error::CliError;

const THREADS_ENV: &str = "DISCRETE_EXTREMES_THREADS";

#[derive(Parser)]
#[command(name = "discrete-extremes", version)]
#[command(about = "Peaks-over-threshold modelling of discrete data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a tail family to exceedances and print a JSON report.
    Fit(FitArgs),
    /// Print QQ points (and a simulated envelope) as CSV.
    Qq(QqArgs),
    /// Run one of the bundled studies.
    Replicate {
        #[command(subcommand)]
        study: Study,
    },
}

#[derive(Subcommand)]
enum Study {
    /// Inverse-gamma rare-event simulation; CSV by default.
    Table1 {
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[arg(long, default_value_t = 8000)]
        n: usize,
        #[arg(long, default_value_t = 0.95)]
        percentile: f64,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Poisson exceedances fitted by GPD, D-GPD and GZD.
    PoissonIntro {
        #[arg(long, default_value_t = 5000)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 3)]
        u: u64,
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Censored fits to the bundled multiple-birth counts.
    Births,
    /// Zipf–Mandelbrot exceedance ratio against the GZD.
    Theorem1 {
        #[arg(long, default_value_t = 3.0)]
        s: f64,
        #[arg(long, default_value_t = 10_000)]
        u: u64,
        #[arg(long, default_value_t = 10)]
        k_max: u64,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| {
        CliError::Usage(format!(
            "{THREADS_ENV} must be a non-negative integer, got {v:?}"
        ))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("{THREADS_ENV}: {e}")))?;
    }
    Ok(())
}

/// Output and whether the underlying fit converged.
fn run(cli: Cli) -> Result<(String, bool), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Fit(args) => commands::cmd_fit(&args),
        Command::Qq(args) => commands::cmd_qq(&args),
        Command::Replicate { study } => {
            let out = match study {
                Study::Table1 {
                    reps,
                    n,
                    percentile,
                    seed,
                    json,
                } => commands::replicate_table1(reps, n, percentile, seed, json),
                Study::PoissonIntro {
                    n,
                    lambda,
                    u,
                    seeds,
                    seed,
                } => commands::replicate_poisson_intro(n, lambda, u, seeds, seed),
                Study::Births => commands::replicate_births(),
                Study::Theorem1 { s, u, k_max } => commands::replicate_theorem1(s, u, k_max),
            }?;
            Ok((out, true))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((out, converged)) => {
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
            if converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("warning: the optimizer did not converge");
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
