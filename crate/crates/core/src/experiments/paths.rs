//! Observed and quasi-path samples per observation design.

use std::path::Path;

use rayon::prelude::*;

use super::config::{Cell, ExperimentConfig};
use super::output::{verb_dir, write_text, Manifest};
use crate::error::{Error, Result};
use crate::levy_model::simulate_increments;
use crate::quasi::{sample_permutation_set, Permutation, QuasiEnsemble};
use crate::rng::derive_seed;

pub const VERB: &str = "simulate-paths";

const PLOT_SCRIPT: &str = r#"# Observed path (black) and quasi-paths (gray) per (T, h) cell.
import glob, os
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))
for cell in sorted(glob.glob(os.path.join(here, "T*_h*"))):
    fig, ax = plt.subplots(figsize=(7, 4))
    for f in sorted(glob.glob(os.path.join(cell, "quasi_*.csv"))):
        d = pd.read_csv(f)
        ax.step(d["t"], d["value"], where="post", color="0.7", lw=0.5)
    d = pd.read_csv(os.path.join(cell, "observed.csv"))
    ax.step(d["t"], d["value"], where="post", color="k", lw=1.0)
    ax.set_title(os.path.basename(cell))
    ax.set_xlabel("t")
    fig.savefig(cell + ".png", dpi=120)
    plt.close(fig)
"#;

/// Cells of the design, in row-major `(horizon, spacing)` order.
pub fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    let p = &config.paths;
    p.horizons
        .iter()
        .flat_map(|&horizon| p.spacings.iter().map(move |&h| Cell { horizon, h }))
        .collect()
}

/// Writes `observed.csv` and `alpha` quasi-path files per cell, a plot
/// script and the manifest into `<output>/simulate-paths`.
pub fn run_paths_experiment(config: &ExperimentConfig) -> Result<Manifest> {
    config.validate()?;
    let dir = verb_dir(&config.output, VERB)?;
    let cells = cells(config);
    let seeds: Vec<u64> = (0..cells.len() as u64).map(|i| derive_seed(config.seed, i)).collect();
    let files = cells
        .par_iter()
        .zip(&seeds)
        .map(|(cell, &seed)| write_cell(&dir, cell, seed, config))
        .collect::<Result<Vec<_>>>()?;
    let mut files: Vec<String> = files.into_iter().flatten().collect();
    write_text(&dir.join("plot_paths.py"), PLOT_SCRIPT)?;
    files.push("plot_paths.py".into());
    let manifest = Manifest::new(VERB, config, seeds, files)?;
    manifest.write(&dir)?;
    Ok(manifest)
}

fn write_cell(dir: &Path, cell: &Cell, seed: u64, config: &ExperimentConfig) -> Result<Vec<String>> {
    let p = &config.paths;
    let scheme = cell.scheme()?;
    let increments = simulate_increments(&p.model, &scheme, derive_seed(seed, 1))?;
    let mut perms = sample_permutation_set(scheme.n(), p.alpha, derive_seed(seed, 2))?;
    if p.identity_override {
        perms[0] = Permutation::identity(scheme.n());
    }
    let ensemble = QuasiEnsemble::new(increments, p.model.u0, scheme.h(), perms)?;
    let label = cell.label();
    let cell_dir = dir.join(&label);
    std::fs::create_dir_all(&cell_dir).map_err(|e| Error::io(&cell_dir, e))?;
    let mut files = vec![format!("{label}/observed.csv")];
    ensemble.observed_path().write_csv(&cell_dir.join("observed.csv"), None)?;
    for i in 0..ensemble.alpha() {
        let name = format!("quasi_{i:03}.csv");
        ensemble.quasi_path(i)?.write_csv(&cell_dir.join(&name), None)?;
        files.push(format!("{label}/{name}"));
    }
    Ok(files)
}
