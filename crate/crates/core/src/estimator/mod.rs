//! Minimum-contrast estimation over a parameter box.
//!
//! [`minimize_contrast`] finds `argmin_theta P h_theta` for the uniform
//! measure `P` on a [`PathSample`] (a quasi-ensemble, stored paths or
//! simulated model paths); [`sandwich_covariance`] gives the plug-in
//! `V^{-1} J V^{-1}`; the oracle functions build reference minimizers from
//! independent model paths.

mod optimize;
mod oracle;
mod sample;
mod sandwich;

pub use optimize::{minimize_contrast, ContrastProblem, EstimatorResult, OptimizerOptions, TraceEntry};
pub use oracle::{
    argmin, dense_grid_oracle, grid_profile, oracle_estimate, DenseOracle, DenseOracleOptions, GridProfile,
    Identifiability,
};
pub use sample::{sample_mean, PathSample, SimulatedPaths};
pub use sandwich::{plug_in_moments, sandwich_covariance, MAX_CONDITION};
