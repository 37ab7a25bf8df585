//! Minimum-contrast estimation of path-functional parameters of Lévy
//! processes, using quasi-paths built by permuting observed increments.
//!
//! The crate covers simulation of jump-diffusion increments
//! ([`levy_model`]), step paths ([`path`]), permutation ensembles
//! ([`quasi`]), parameterized path functionals ([`functionals`]), contrast
//! minimization with a sandwich covariance and a Monte-Carlo oracle
//! ([`estimator`]), distributional diagnostics ([`diagnostics`]) and the
//! configuration-driven experiments behind the command-line tool
//! ([`experiments`], [`check`]).

pub mod check;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod functionals;
pub mod levy_model;
pub mod path;
pub mod quasi;
pub mod rng;
pub mod stats;

pub use domain::{ThetaBox, UniformGrid};
pub use error::{Error, Result};
pub use functionals::PathFunctional;
pub use levy_model::{JumpDiffusionModel, SamplingScheme};
pub use path::SteppedPath;
pub use quasi::{Permutation, QuasiEnsemble};
