//! Configuration-driven experiments behind the command-line verbs.
//!
//! Each verb validates the whole [`ExperimentConfig`] before simulating,
//! writes only into `<output>/<verb>`, and records a [`Manifest`] with the
//! configuration hash, seeds and generator identity.

pub mod config;
pub mod estimation;
pub mod marginals;
pub mod output;
pub mod paths;

pub use config::{
    estimation_model, reference_model, Cell, EstimationConfig, ExperimentConfig, FunctionalConfig, MarginalsConfig,
    OracleConfig, PathsConfig,
};
pub use estimation::run_estimation_experiment;
pub use marginals::run_marginal_experiment;
pub use output::{LongRow, Manifest};
pub use paths::run_paths_experiment;
