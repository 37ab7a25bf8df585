//! Marginal-law comparison of quasi-paths with the process.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Cell, ExperimentConfig};
use super::output::{verb_dir, write_rows, write_text, LongRow, Manifest};
use crate::diagnostics::{kde, ks_statistic, quasi_marginal_samples, quasi_ruin_distance, Bandwidth};
use crate::error::Result;
use crate::levy_model::JumpDiffusionModel;
use crate::rng::derive_seed;
use crate::stats;

pub const VERB: &str = "marginals";

const PLOT_SCRIPT: &str = r#"# Density estimates of the quasi and oracle marginals, and KS by cell.
import glob, os
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))
for f in sorted(glob.glob(os.path.join(here, "kde_*.csv"))):
    d = pd.read_csv(f)
    fig, ax = plt.subplots(figsize=(6, 4))
    for source, g in d.groupby("source"):
        ax.plot(g["x"], g["density"], label=source)
    ax.legend()
    ax.set_title(os.path.basename(f)[4:-4])
    fig.savefig(f[:-4] + ".png", dpi=120)
    plt.close(fig)

t = pd.read_csv(os.path.join(here, "ks_table.csv"))
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(range(len(t)), t["median_ks"], "o-")
ax.set_xticks(range(len(t)))
ax.set_xticklabels([f"T={a:g}, h={b:g}" for a, b in zip(t["T"], t["h"])])
ax.set_ylabel("median KS")
fig.savefig(os.path.join(here, "ks_table.png"), dpi=120)
"#;

/// Median KS summary of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsRow {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub h: f64,
    pub n: usize,
    pub alpha: usize,
    pub replications: usize,
    pub median_ks: f64,
    pub min_ks: f64,
    pub max_ks: f64,
    pub median_ks_ruin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct KdeRow {
    source: &'static str,
    x: f64,
    density: f64,
}

/// Marginal KS distance at `time` for each seed (one fresh observed path and
/// ensemble per seed).
pub fn marginal_ks(
    model: &JumpDiffusionModel,
    cell: &Cell,
    time: f64,
    alpha: usize,
    oracle_paths: usize,
    seeds: &[u64],
) -> Result<Vec<f64>> {
    let scheme = cell.scheme()?;
    seeds
        .par_iter()
        .map(|&s| {
            let (q, o) = quasi_marginal_samples(model, &scheme, time, alpha, oracle_paths, s)?;
            ks_statistic(&q, &o)
        })
        .collect()
}

struct CellResult {
    rows: Vec<LongRow>,
    summary: KsRow,
    kde: Vec<KdeRow>,
}

fn run_cell(cell: &Cell, seeds: &[u64], config: &ExperimentConfig) -> Result<CellResult> {
    let m = &config.marginals;
    let scheme = cell.scheme()?;
    let per_seed = seeds
        .par_iter()
        .enumerate()
        .map(|(r, &s)| {
            let (q, o) = quasi_marginal_samples(&m.model, &scheme, m.time, m.alpha, m.oracle_paths, s)?;
            let ks = ks_statistic(&q, &o)?;
            let ruin = match m.ruin_level {
                Some(xi) => Some(quasi_ruin_distance(&m.model, &scheme, xi, m.alpha, m.oracle_paths, s)?),
                None => None,
            };
            let curves = if r == 0 { Some((q, o)) } else { None };
            Ok((ks, ruin, curves))
        })
        .collect::<Result<Vec<_>>>()?;

    let row = |seed: u64, metric: &str, value: f64| LongRow {
        experiment: VERB.into(),
        h: cell.h,
        horizon: cell.horizon,
        alpha: m.alpha,
        seed,
        metric: metric.into(),
        value,
    };
    let mut rows = Vec::new();
    for ((ks, ruin, _), &s) in per_seed.iter().zip(seeds) {
        rows.push(row(s, "ks", *ks));
        if let Some(v) = ruin {
            rows.push(row(s, "ks_ruin", *v));
        }
    }
    let ks: Vec<f64> = per_seed.iter().map(|v| v.0).collect();
    let ruin: Vec<f64> = per_seed.iter().filter_map(|v| v.1).collect();
    let summary = KsRow {
        horizon: cell.horizon,
        h: cell.h,
        n: scheme.n(),
        alpha: m.alpha,
        replications: seeds.len(),
        median_ks: stats::median(&ks),
        min_ks: ks.iter().copied().fold(f64::INFINITY, f64::min),
        max_ks: ks.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        median_ks_ruin: (!ruin.is_empty()).then(|| stats::median(&ruin)),
    };

    let bandwidth = m.bandwidth.map_or(Bandwidth::Silverman, Bandwidth::Fixed);
    let mut kde_rows = Vec::new();
    if let Some((_, _, Some((q, o)))) = per_seed.first() {
        for (source, sample) in [("quasi", q), ("oracle", o)] {
            if sample.len() >= 2 {
                let k = kde(sample, bandwidth, m.kde_points)?;
                kde_rows.extend(k.grid.iter().zip(&k.density).map(|(&x, &density)| KdeRow { source, x, density }));
            }
        }
    }
    Ok(CellResult {
        rows,
        summary,
        kde: kde_rows,
    })
}

/// Writes the long KS table, the per-cell summary, density curves of the
/// first replication and a plot script into `<output>/marginals`.
pub fn run_marginal_experiment(config: &ExperimentConfig) -> Result<Manifest> {
    config.validate()?;
    let dir = verb_dir(&config.output, VERB)?;
    let m = &config.marginals;
    let seeds: Vec<u64> = (0..m.replications as u64).map(|r| derive_seed(config.seed, r)).collect();
    let results = m
        .cells
        .par_iter()
        .map(|c| run_cell(c, &seeds, config))
        .collect::<Result<Vec<_>>>()?;

    let mut files = vec!["results.csv".to_string(), "ks_table.csv".into(), "plot_marginals.py".into()];
    let rows: Vec<LongRow> = results.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    write_rows(&dir.join("results.csv"), &rows)?;
    let table: Vec<KsRow> = results.iter().map(|r| r.summary.clone()).collect();
    write_rows(&dir.join("ks_table.csv"), &table)?;
    for (cell, r) in m.cells.iter().zip(&results) {
        if !r.kde.is_empty() {
            let name = format!("kde_{}.csv", cell.label());
            write_rows(&dir.join(&name), &r.kde)?;
            files.push(name);
        }
    }
    write_text(&dir.join("plot_marginals.py"), PLOT_SCRIPT)?;
    let manifest = Manifest::new(VERB, config, seeds, files)?;
    manifest.write(&dir)?;
    Ok(manifest)
}
