//! Quasi-path estimation against a Monte-Carlo reference value.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::config::{EstimationConfig, ExperimentConfig};
use super::output::{verb_dir, write_rows, write_text, LongRow, Manifest};
use crate::domain::ThetaBox;
use crate::error::{Error, Result};
use crate::estimator::{
    dense_grid_oracle, minimize_contrast, oracle_estimate, sandwich_covariance, ContrastProblem, DenseOracleOptions,
    GridProfile, Identifiability, OptimizerOptions,
};
use crate::functionals::PathFunctional;
use crate::levy_model::{simulate_increments, JumpDiffusionModel, SamplingScheme};
use crate::quasi::{default_alpha, reporting_rate, QuasiEnsemble};
use crate::rng::derive_seed;
use crate::stats;

pub const VERB: &str = "estimate";

/// Label of the oracle's seed family; replications use labels `0..R`.
const ORACLE_LABEL: u64 = 1 << 40;

const PLOT_SCRIPT: &str = r#"# Error decay, standardized-estimate QQ plots and the oracle contrast.
import os
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd
from scipy.stats import norm

here = os.path.dirname(os.path.abspath(__file__))
t = pd.read_csv(os.path.join(here, "error_table.csv"))
fig, ax = plt.subplots(figsize=(6, 4))
ax.loglog(t["n"], t["median_abs_error"], "o-")
ax.set_xlabel("n")
ax.set_ylabel("median |theta_hat - theta0|")
fig.savefig(os.path.join(here, "error_table.png"), dpi=120)

q = pd.read_csv(os.path.join(here, "qq.csv"))
fig, ax = plt.subplots(figsize=(5, 5))
for n, g in q.groupby("n"):
    ax.plot(g["normal_quantile"], g["standardized"], ".", label=f"n={n}")
ax.axline((0, 0), slope=1, color="k", lw=0.5)
ax.legend()
fig.savefig(os.path.join(here, "qq.png"), dpi=120)

p = os.path.join(here, "oracle_profile.csv")
if os.path.exists(p):
    d = pd.read_csv(p)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(d["theta"], d["contrast"])
    ax.set_xlabel("theta")
    fig.savefig(os.path.join(here, "oracle_profile.png"), dpi=120)
"#;

/// Reference value of the parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub theta0: Vec<f64>,
    pub contrast: f64,
    pub paths: usize,
    pub h: f64,
    pub seed: u64,
    /// Grid spacing of a dense-grid reference.
    pub resolution: Option<f64>,
    pub half_minimizers: Option<[f64; 2]>,
    pub identifiability: Option<Identifiability>,
}

/// Reference estimate from independent model paths: a dense grid for one
/// parameter, the contrast optimizer otherwise.
pub fn reference_estimate(cfg: &EstimationConfig, seed: u64) -> Result<(Reference, Option<GridProfile>)> {
    let (f, domain) = cfg.problem()?;
    let h = cfg.oracle_h()?;
    let o = &cfg.oracle;
    if domain.dim() == 1 && !domain.is_point() {
        let opts = DenseOracleOptions {
            paths: o.paths,
            grid_points: o.grid_points,
            h,
            seed,
            separation: o.separation,
        };
        let d = dense_grid_oracle(&cfg.model, f.as_ref(), &domain, &opts)?;
        let reference = Reference {
            theta0: vec![d.theta0],
            contrast: d.contrast_at_min,
            paths: o.paths,
            h,
            seed,
            resolution: Some(d.profile.resolution()),
            half_minimizers: Some(d.half_minimizers),
            identifiability: Some(d.identifiability),
        };
        return Ok((reference, Some(d.profile)));
    }
    let trunc = f.truncation(&domain);
    if trunc.horizon.is_none() {
        return Err(Error::param("the reference estimate needs a functional with a finite horizon"));
    }
    let scheme = SamplingScheme::new(trunc.steps(h, usize::MAX), h)?;
    let r = oracle_estimate(&cfg.model, &scheme, f.as_ref(), &domain, o.paths, seed, &cfg.optimizer)?;
    let reference = Reference {
        theta0: r.theta_hat,
        contrast: r.contrast_at_min,
        paths: o.paths,
        h,
        seed,
        resolution: None,
        half_minimizers: None,
        identifiability: None,
    };
    Ok((reference, None))
}

/// One quasi-path estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub n: usize,
    pub h: f64,
    pub alpha: usize,
    pub seed: u64,
    pub theta_hat: Vec<f64>,
    pub contrast: f64,
    pub sigma_hat: Option<Vec<f64>>,
    pub tolerance_reached: bool,
}

/// Estimate from given increments with `alpha` permutations drawn from
/// `perm_seed`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_on_increments(
    model: &JumpDiffusionModel,
    f: &dyn PathFunctional,
    domain: &ThetaBox,
    increments: Vec<f64>,
    h: f64,
    alpha: usize,
    perm_seed: u64,
    opts: &OptimizerOptions,
    sandwich: bool,
) -> Result<Replication> {
    let n = increments.len();
    let ensemble = QuasiEnsemble::sampled(increments, model.u0, h, alpha, perm_seed)?;
    let problem = ContrastProblem::new(&ensemble, f, domain.clone())?;
    let r = minimize_contrast(&problem, opts)?;
    let sigma_hat = if sandwich && !domain.is_point() {
        match sandwich_covariance(&problem, &r.theta_hat) {
            Ok(s) => Some(s),
            Err(e @ (Error::DegenerateHessian { .. } | Error::Unsupported(_))) => {
                log::warn!("no sandwich covariance at n = {n}: {e}");
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(Replication {
        n,
        h,
        alpha,
        seed: perm_seed,
        theta_hat: r.theta_hat,
        contrast: r.contrast_at_min,
        sigma_hat,
        tolerance_reached: r.tolerance_reached,
    })
}

/// Estimate from a fresh observed path on `h = n^{-beta}` with the
/// configured resampling size.
pub fn estimate_replication(
    cfg: &EstimationConfig,
    f: &dyn PathFunctional,
    domain: &ThetaBox,
    n: usize,
    seed: u64,
) -> Result<Replication> {
    let scheme = cfg.scheme(n)?;
    let alpha = alpha_for(cfg, n, domain.dim());
    let increments = simulate_increments(&cfg.model, &scheme, derive_seed(seed, 1))?;
    let mut r = estimate_on_increments(
        &cfg.model,
        f,
        domain,
        increments,
        scheme.h(),
        alpha,
        derive_seed(seed, 2),
        &cfg.optimizer,
        cfg.sandwich,
    )?;
    r.seed = seed;
    Ok(r)
}

pub fn alpha_for(cfg: &EstimationConfig, n: usize, dim: usize) -> usize {
    cfg.alpha.unwrap_or_else(|| default_alpha(n, cfg.beta, dim))
}

/// Seed of replication `r` at sample size `n`.
pub fn replication_seed(base: u64, r: usize, n: usize) -> u64 {
    derive_seed(derive_seed(base, r as u64), n as u64)
}

pub fn oracle_seed(base: u64) -> u64 {
    derive_seed(base, ORACLE_LABEL)
}

/// `|theta_hat - theta0|` (Euclidean).
pub fn abs_error(theta_hat: &[f64], theta0: &[f64]) -> f64 {
    theta_hat.iter().zip(theta0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Summary of the replications at one sample size. Multi-parameter
/// variances are traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub n: usize,
    pub h: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub alpha: usize,
    pub replications: usize,
    pub median_abs_error: f64,
    pub mean_theta: f64,
    pub var_theta: f64,
    pub median_sigma_hat: Option<f64>,
    /// `r_n = n^{beta/(d + 1/2)}`.
    pub rate: f64,
    /// `r_n * var_theta / median_sigma_hat`; near 1 when the sandwich
    /// describes the spread at rate `r_n`.
    pub sigma_ratio: Option<f64>,
}

pub fn summarize(reps: &[Replication], theta0: &[f64], beta: f64) -> ErrorRow {
    let first = &reps[0];
    let d = first.theta_hat.len();
    let errors: Vec<f64> = reps.iter().map(|r| abs_error(&r.theta_hat, theta0)).collect();
    let coord = |j: usize| reps.iter().map(|r| r.theta_hat[j]).collect::<Vec<_>>();
    let var_theta = (0..d).map(|j| stats::variance(&coord(j))).sum();
    let traces: Vec<f64> = reps
        .iter()
        .filter_map(|r| r.sigma_hat.as_ref().map(|s| (0..d).map(|j| s[j * d + j]).sum()))
        .collect();
    let median_sigma_hat = (!traces.is_empty()).then(|| stats::median(&traces));
    let rate = reporting_rate(first.n, beta, d);
    ErrorRow {
        n: first.n,
        h: first.h,
        horizon: first.n as f64 * first.h,
        alpha: first.alpha,
        replications: reps.len(),
        median_abs_error: stats::median(&errors),
        mean_theta: stats::mean(&coord(0)),
        var_theta,
        median_sigma_hat,
        rate,
        sigma_ratio: median_sigma_hat.map(|s| rate * var_theta / s),
    }
}

/// `(theta - median) / MAD` of the first coordinate, sorted.
pub fn standardized(reps: &[Replication]) -> Vec<f64> {
    let xs: Vec<f64> = reps.iter().map(|r| r.theta_hat[0]).collect();
    let med = stats::median(&xs);
    let mad = stats::mad_scaled(&xs);
    let scale = if mad > 0.0 { mad } else { 1.0 };
    stats::sorted(&xs.iter().map(|x| (x - med) / scale).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct QqRow {
    n: usize,
    normal_quantile: f64,
    standardized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ProfileRow {
    theta: f64,
    contrast: f64,
    first_half: f64,
    second_half: f64,
}

/// Runs the reference estimate and `replications` quasi-path estimates per
/// sample size, writing tables and a plot script into `<output>/estimate`.
pub fn run_estimation_experiment(config: &ExperimentConfig) -> Result<Manifest> {
    config.validate()?;
    let dir = verb_dir(&config.output, VERB)?;
    let cfg = &config.estimation;
    let (f, domain) = cfg.problem()?;
    let oseed = oracle_seed(config.seed);
    let (reference, profile) = reference_estimate(cfg, oseed)?;
    if let Some(id) = reference.identifiability {
        if !id.passed {
            let msg = format!("identifiability margin {} does not exceed its noise {}", id.margin, id.noise);
            if cfg.continue_on_identifiability_failure {
                log::warn!("{msg}");
            } else {
                return Err(Error::Numeric {
                    theta: reference.theta0.clone(),
                    message: msg,
                });
            }
        }
    }
    let mut files = vec![
        "reference.json".to_string(),
        "results.csv".into(),
        "error_table.csv".into(),
        "qq.csv".into(),
        "plot_estimate.py".into(),
    ];
    let json = serde_json::to_string_pretty(&reference).map_err(|e| Error::io(&dir, std::io::Error::other(e)))?;
    write_text(&dir.join("reference.json"), &json)?;
    if let Some(p) = &profile {
        let rows: Vec<ProfileRow> = (0..p.grid.len())
            .map(|i| ProfileRow {
                theta: p.grid[i],
                contrast: p.contrast[i],
                first_half: p.halves[0][i],
                second_half: p.halves[1][i],
            })
            .collect();
        write_rows(&dir.join("oracle_profile.csv"), &rows)?;
        files.push("oracle_profile.csv".into());
    }

    let normal = Normal::standard();
    let (mut rows, mut table, mut qq) = (Vec::new(), Vec::new(), Vec::new());
    for &n in &cfg.sizes {
        let reps = (0..cfg.replications)
            .map(|r| estimate_replication(cfg, f.as_ref(), &domain, n, replication_seed(config.seed, r, n)))
            .collect::<Result<Vec<_>>>()?;
        for rep in &reps {
            let row = |metric: String, value: f64| LongRow {
                experiment: VERB.into(),
                h: rep.h,
                horizon: rep.n as f64 * rep.h,
                alpha: rep.alpha,
                seed: rep.seed,
                metric,
                value,
            };
            for (j, t) in rep.theta_hat.iter().enumerate() {
                rows.push(row(format!("theta_hat_{j}"), *t));
            }
            rows.push(row("abs_error".into(), abs_error(&rep.theta_hat, &reference.theta0)));
            rows.push(row("contrast".into(), rep.contrast));
            if let Some(s) = &rep.sigma_hat {
                for (j, v) in s.iter().enumerate() {
                    rows.push(row(format!("sigma_hat_{j}"), *v));
                }
            }
        }
        table.push(summarize(&reps, &reference.theta0, cfg.beta));
        let z = standardized(&reps);
        let m = z.len() as f64;
        qq.extend(z.iter().enumerate().map(|(i, &s)| QqRow {
            n,
            normal_quantile: normal.inverse_cdf((i as f64 + 0.625) / (m + 0.25)),
            standardized: s,
        }));
    }
    write_rows(&dir.join("results.csv"), &rows)?;
    write_rows(&dir.join("error_table.csv"), &table)?;
    write_rows(&dir.join("qq.csv"), &qq)?;
    write_text(&dir.join("plot_estimate.py"), PLOT_SCRIPT)?;

    let mut seeds: Vec<u64> = (0..cfg.replications as u64).map(|r| derive_seed(config.seed, r)).collect();
    seeds.push(oseed);
    let manifest = Manifest::new(VERB, config, seeds, files)?;
    manifest.write(&dir)?;
    Ok(manifest)
}
