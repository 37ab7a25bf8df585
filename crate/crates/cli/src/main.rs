//! `quasilevy` command-line experiment runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quasilevy::check::{self, CheckOptions, CRITERIA};
use quasilevy::experiments::{self, ExperimentConfig};
use quasilevy::Error;

#[derive(Debug, Parser)]
#[command(name = "quasilevy", version, about = "Quasi-path experiments for Lévy path functionals")]
struct Cli {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base seed, overriding the configuration.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output root, overriding the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (all cores when omitted).
    #[arg(long, global = true, value_name = "K")]
    jobs: Option<usize>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Observed and quasi-path CSVs per (T, h) cell.
    SimulatePaths,
    /// KS distances and density estimates of marginal laws.
    Marginals,
    /// Reference value and quasi-path estimates over the size schedule.
    Estimate,
    /// Runs the acceptance criteria.
    Check {
        /// Run only these criteria (repeatable); all when omitted.
        #[arg(long = "criterion", value_name = "ID")]
        criteria: Vec<usize>,
    },
    /// Prints the effective configuration as TOML.
    ShowConfig,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_CHECK: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parameter(_) | Error::Domain(_) => EXIT_CONFIG,
        Error::Numeric { .. } | Error::DegenerateHessian { .. } => EXIT_NUMERIC,
        _ => 1,
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(o) = &cli.out {
        config.output = o.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<u8, Error> {
    let config = load_config(cli)?;
    match &cli.verb {
        Verb::SimulatePaths => report(experiments::run_paths_experiment(&config)?),
        Verb::Marginals => report(experiments::run_marginal_experiment(&config)?),
        Verb::Estimate => report(experiments::run_estimation_experiment(&config)?),
        Verb::ShowConfig => print!("{}", config.to_toml()?),
        Verb::Check { criteria } => {
            let ids: Vec<usize> = if criteria.is_empty() {
                CRITERIA.iter().map(|c| c.0).collect()
            } else {
                criteria.clone()
            };
            let opts = CheckOptions { seed: config.seed };
            let mut reports = Vec::new();
            for id in ids {
                let r = check::run_criterion(id, &opts)?;
                println!("{r}");
                reports.push(r);
            }
            if cli.out.is_some() {
                let dir = experiments::output::verb_dir(&config.output, "check")?;
                let path = dir.join("report.json");
                let text = serde_json::to_string_pretty(&reports).expect("reports serialize");
                experiments::output::write_text(&path, &text)?;
            }
            if reports.iter().any(|r| !r.passed) {
                return Ok(EXIT_CHECK);
            }
        }
    }
    Ok(0)
}

fn report(m: experiments::Manifest) {
    println!(
        "{}: wrote {} files (config sha256 {})",
        m.verb,
        m.files.len() + 1,
        m.config_sha256
    );
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(k) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global() {
            eprintln!("error: cannot start {k} workers: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
