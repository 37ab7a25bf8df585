//! End-to-end runs of the experiment verbs on small configurations.

use std::fs;
use std::path::Path;

use quasilevy::error::Error;
use quasilevy::experiments::estimation::estimate_on_increments;
use quasilevy::experiments::{
    run_estimation_experiment, run_marginal_experiment, run_paths_experiment, Cell, ExperimentConfig,
};
use quasilevy::functionals::{DiscountedLoss, DividendParams, Negated};
use quasilevy::levy_model::simulate_increments;
use quasilevy::{stats, JumpDiffusionModel, SamplingScheme};

fn small_config(out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        output: out.to_path_buf(),
        seed: 11,
        ..ExperimentConfig::default()
    };
    c.paths.horizons = vec![2.0];
    c.paths.spacings = vec![0.5, 0.1];
    c.paths.alpha = 4;
    c.marginals.cells = vec![Cell { horizon: 4.0, h: 1.0 }, Cell { horizon: 10.0, h: 0.05 }];
    c.marginals.alpha = 100;
    c.marginals.oracle_paths = 100;
    c.marginals.replications = 3;
    c.estimation.sizes = vec![400, 1600];
    c.estimation.replications = 3;
    c.estimation.oracle.paths = 400;
    c.estimation.oracle.grid_points = 200;
    c
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn paths_experiment_writes_every_cell_reproducibly() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = run_paths_experiment(&small_config(a.path())).unwrap();
    let mb = run_paths_experiment(&small_config(b.path())).unwrap();
    assert_eq!((&ma.config_sha256, &ma.seeds, &ma.files), (&mb.config_sha256, &mb.seeds, &mb.files));
    assert_eq!(ma.files.len(), 2 * 5 + 1);
    let (da, db) = (a.path().join("simulate-paths"), b.path().join("simulate-paths"));
    for f in &ma.files {
        assert_eq!(read(&da, f), read(&db, f), "{f}");
    }
    assert!(da.join("manifest.json").exists());
    assert!(!a.path().join("marginals").exists());
}

#[test]
fn identity_override_reproduces_the_observed_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config(dir.path());
    c.paths.alpha = 1;
    c.paths.identity_override = true;
    run_paths_experiment(&c).unwrap();
    let cell = dir.path().join("simulate-paths").join("T2_h0.1");
    assert_eq!(read(&cell, "quasi_000.csv"), read(&cell, "observed.csv"));
}

#[test]
fn degenerate_model_has_zero_marginal_distance() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config(dir.path());
    c.marginals.model = JumpDiffusionModel::surplus(2.0, 0.0, 0.0, 1.0, 0.0).unwrap();
    c.marginals.ruin_level = Some(-1.0);
    let m = run_marginal_experiment(&c).unwrap();
    assert!(m.files.iter().any(|f| f.starts_with("kde_")));
    let text = fs::read_to_string(dir.path().join("marginals/results.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "experiment,h,T,alpha,seed,metric,value");
    let values: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 2 * 3 * 2);
    assert!(values.iter().all(|v| *v == 0.0));
}

#[test]
fn marginal_experiment_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = run_marginal_experiment(&small_config(a.path())).unwrap();
    run_marginal_experiment(&small_config(b.path())).unwrap();
    for f in &ma.files {
        assert_eq!(read(&a.path().join("marginals"), f), read(&b.path().join("marginals"), f), "{f}");
    }
}

#[test]
fn estimation_experiment_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_estimation_experiment(&small_config(dir.path())).unwrap();
    let out = dir.path().join("estimate");
    for f in &m.files {
        assert!(out.join(f).exists(), "{f}");
    }
    let table = fs::read_to_string(out.join("error_table.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert_eq!(m.seeds.len(), 4);
}

#[test]
fn singleton_box_pins_every_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config(dir.path());
    c.estimation.theta_lower = Some(vec![5.0]);
    c.estimation.theta_upper = Some(vec![5.0]);
    run_estimation_experiment(&c).unwrap();
    let text = fs::read_to_string(dir.path().join("estimate/results.csv")).unwrap();
    let thetas: Vec<f64> = text
        .lines()
        .filter(|l| l.contains(",theta_hat_0,"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(thetas.len(), 6);
    assert!(thetas.iter().all(|t| *t == 5.0));
}

#[test]
fn more_permutations_reduce_estimate_spread() {
    let model = JumpDiffusionModel::surplus(20.0, 10.0, 5.0, 3.0, 10.0).unwrap();
    let scheme = SamplingScheme::hflt(1_000, 0.5).unwrap();
    let increments = simulate_increments(&model, &scheme, 5).unwrap();
    let p = DividendParams::default();
    let f = Negated(DiscountedLoss::mollified_dividend(&p).unwrap());
    let domain = p.domain().unwrap();
    let spread = |alpha: usize| {
        let thetas: Vec<f64> = (0..20)
            .map(|s| {
                estimate_on_increments(
                    &model,
                    &f,
                    &domain,
                    increments.clone(),
                    scheme.h(),
                    alpha,
                    100 * alpha as u64 + s,
                    &Default::default(),
                    false,
                )
                .unwrap()
                .theta_hat[0]
            })
            .collect();
        stats::variance(&thetas).sqrt()
    };
    let (narrow, wide) = (spread(400), spread(100));
    assert!(narrow < wide, "sd at alpha 400 = {narrow}, at alpha 100 = {wide}");
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let c = small_config(&blocker);
    assert!(matches!(run_paths_experiment(&c), Err(Error::Io { .. })));
}

#[test]
fn invalid_config_fails_before_simulating() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small_config(dir.path());
    c.paths.alpha = 0;
    let e = run_paths_experiment(&c).unwrap_err();
    assert!(matches!(&e, Error::Config(m) if m.contains("paths.alpha")), "{e}");
    assert!(!dir.path().join("simulate-paths").exists());
}
