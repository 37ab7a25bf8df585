//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::ThetaBox;
use crate::error::{Error, Result};
use crate::estimator::OptimizerOptions;
use crate::functionals::{DiscountedLoss, DividendParams, PathFunctional, PerpetualPut};
use crate::levy_model::{JumpDiffusionModel, JumpSign, SamplingScheme};

/// Parameters `(mu, sigma, lambda, m, u) = (20, 10, 5, 3, 0)` of the path
/// and marginal experiments.
pub fn reference_model() -> JumpDiffusionModel {
    model(0.0)
}

/// The reference model started at `u = 10`, used for estimation so that
/// the surplus starts above the default level of the dividend example.
pub fn estimation_model() -> JumpDiffusionModel {
    model(10.0)
}

fn model(u0: f64) -> JumpDiffusionModel {
    JumpDiffusionModel {
        u0,
        mu: 20.0,
        sigma: 10.0,
        lambda: 5.0,
        jump_mean: 3.0,
        jump_sign: JumpSign::Down,
    }
}

/// Complete configuration of every experiment verb.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Base seed; replication `i` of an experiment uses `derive_seed(seed, i)`.
    pub seed: u64,
    /// Each verb writes into its own subdirectory of this directory.
    pub output: PathBuf,
    pub paths: PathsConfig,
    pub marginals: MarginalsConfig,
    pub estimation: EstimationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output: PathBuf::from("out"),
            paths: PathsConfig::default(),
            marginals: MarginalsConfig::default(),
            estimation: EstimationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub model: JumpDiffusionModel,
    pub horizons: Vec<f64>,
    pub spacings: Vec<f64>,
    /// Quasi-paths per cell.
    pub alpha: usize,
    /// Make the first quasi-path use the identity permutation.
    pub identity_override: bool,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            model: reference_model(),
            horizons: vec![10.0, 50.0, 100.0],
            spacings: vec![1.0, 0.1, 0.05, 0.005],
            alpha: 100,
            identity_override: false,
        }
    }
}

/// One observation design `(T, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub horizon: f64,
    pub h: f64,
}

impl Cell {
    pub fn scheme(&self) -> Result<SamplingScheme> {
        SamplingScheme::covering(self.horizon, self.h)
    }

    /// Directory-safe label such as `T100_h0.005`.
    pub fn label(&self) -> String {
        format!("T{}_h{}", self.horizon, self.h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarginalsConfig {
    pub model: JumpDiffusionModel,
    pub cells: Vec<Cell>,
    /// Time of the compared marginal.
    pub time: f64,
    pub alpha: usize,
    pub oracle_paths: usize,
    pub replications: usize,
    /// Also compare ruin times below this level when set.
    pub ruin_level: Option<f64>,
    pub kde_points: usize,
    /// Fixed KDE bandwidth; Silverman's rule when unset.
    pub bandwidth: Option<f64>,
}

impl Default for MarginalsConfig {
    fn default() -> Self {
        Self {
            model: reference_model(),
            cells: vec![
                Cell { horizon: 10.0, h: 1.0 },
                Cell { horizon: 50.0, h: 0.01 },
                Cell { horizon: 100.0, h: 0.005 },
            ],
            time: 1.0,
            alpha: 1000,
            oracle_paths: 1000,
            replications: 10,
            ruin_level: Some(0.0),
            kde_points: 512,
            bandwidth: None,
        }
    }
}

/// The functional whose parameter is estimated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalConfig {
    /// Mollified dividends up to ruin, maximized over `[xi, theta_max]`.
    MollifiedDividend(DividendParams),
    /// Level and maturity estimated separately on `[xi, theta_max]^2`.
    TwoThresholdDividend(DividendParams),
    /// Perpetual put value, maximized over the exercise level.
    PerpetualPut { r: f64, strike: f64, horizon: f64, lower: f64, upper: f64 },
}

impl Default for FunctionalConfig {
    fn default() -> Self {
        FunctionalConfig::MollifiedDividend(DividendParams::default())
    }
}

impl FunctionalConfig {
    /// The contrast functional (negated, since every configured objective
    /// is a value to maximize) and its default parameter box.
    pub fn build(&self) -> Result<(Box<dyn PathFunctional>, ThetaBox)> {
        use crate::functionals::Negated;
        Ok(match self {
            FunctionalConfig::MollifiedDividend(params) => {
                let f = DiscountedLoss::mollified_dividend(params)?;
                let d = f.domain().cloned().expect("dividend has a domain");
                (Box::new(Negated(f)), d)
            }
            FunctionalConfig::TwoThresholdDividend(params) => {
                let f = DiscountedLoss::two_threshold_dividend(params)?;
                let d = f.domain().cloned().expect("dividend has a domain");
                (Box::new(Negated(f)), d)
            }
            FunctionalConfig::PerpetualPut {
                r,
                strike,
                horizon,
                lower,
                upper,
            } => {
                let d = ThetaBox::interval(*lower, *upper)?;
                let f = PerpetualPut::new(*r, *strike, *horizon)?.with_domain(d.clone())?;
                (Box::new(Negated(f)), d)
            }
        })
    }
}

/// Sizes of the dense-grid reference estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub paths: usize,
    pub grid_points: usize,
    /// Path spacing; the finest spacing of the estimation schedule when unset.
    pub h: Option<f64>,
    /// Competitors closer than this fraction of the box width are ignored
    /// by the identifiability check.
    pub separation: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            paths: 100_000,
            grid_points: 10_000,
            h: None,
            separation: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationConfig {
    pub model: JumpDiffusionModel,
    pub functional: FunctionalConfig,
    /// Overrides of the functional's default parameter box.
    pub theta_lower: Option<Vec<f64>>,
    pub theta_upper: Option<Vec<f64>>,
    /// Sample sizes `n`, observed on `h = n^{-beta}`.
    pub sizes: Vec<usize>,
    pub beta: f64,
    /// Fixed resampling size; the default schedule in `n` when unset.
    pub alpha: Option<usize>,
    pub replications: usize,
    pub optimizer: OptimizerOptions,
    pub oracle: OracleConfig,
    pub sandwich: bool,
    /// Keep going (with a warning) when the oracle's identifiability
    /// margin does not exceed its noise.
    pub continue_on_identifiability_failure: bool,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            model: estimation_model(),
            functional: FunctionalConfig::default(),
            theta_lower: None,
            theta_upper: None,
            sizes: vec![1_000, 10_000, 100_000],
            beta: 0.5,
            alpha: None,
            replications: 20,
            optimizer: OptimizerOptions::default(),
            oracle: OracleConfig::default(),
            sandwich: true,
            continue_on_identifiability_failure: true,
        }
    }
}

impl EstimationConfig {
    /// Functional and effective parameter box.
    pub fn problem(&self) -> Result<(Box<dyn PathFunctional>, ThetaBox)> {
        let (f, default) = self.functional.build()?;
        let lower = self.theta_lower.clone().unwrap_or_else(|| default.lower().to_vec());
        let upper = self.theta_upper.clone().unwrap_or_else(|| default.upper().to_vec());
        let domain = ThetaBox::new(lower, upper)?;
        if domain.dim() != f.dim() {
            return Err(Error::param(format!(
                "box of dimension {} for a {}-parameter functional",
                domain.dim(),
                f.dim()
            )));
        }
        Ok((f, domain))
    }

    pub fn scheme(&self, n: usize) -> Result<SamplingScheme> {
        SamplingScheme::hflt(n, self.beta)
    }

    /// Spacing of the oracle's paths.
    pub fn oracle_h(&self) -> Result<f64> {
        match self.oracle.h {
            Some(h) => Ok(h),
            None => {
                let n = self.sizes.iter().copied().max().ok_or_else(|| Error::param("empty size schedule"))?;
                Ok(self.scheme(n)?.h())
            }
        }
    }
}

fn field<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Config(format!("{name}: {e}")))
}

fn require(name: &str, ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("{name}: {msg}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Checks every value an experiment will use, before any simulation.
    pub fn validate(&self) -> Result<()> {
        let p = &self.paths;
        field("paths.model", p.model.validate())?;
        require("paths.horizons", !p.horizons.is_empty(), "must be nonempty")?;
        require("paths.spacings", !p.spacings.is_empty(), "must be nonempty")?;
        for &t in &p.horizons {
            for &h in &p.spacings {
                field("paths.horizons/spacings", Cell { horizon: t, h }.scheme())?;
            }
        }
        require("paths.alpha", p.alpha >= 1, "must be >= 1")?;

        let m = &self.marginals;
        field("marginals.model", m.model.validate())?;
        require("marginals.cells", !m.cells.is_empty(), "must be nonempty")?;
        for c in &m.cells {
            let s = field("marginals.cells", c.scheme())?;
            require("marginals.time", m.time >= 0.0 && m.time <= s.horizon(), "must lie in [0, T] for every cell")?;
        }
        require("marginals.alpha", m.alpha >= 1, "must be >= 1")?;
        require("marginals.oracle_paths", m.oracle_paths >= 1, "must be >= 1")?;
        require("marginals.replications", m.replications >= 1, "must be >= 1")?;
        require("marginals.kde_points", m.kde_points >= 2, "must be >= 2")?;
        if let Some(b) = m.bandwidth {
            require("marginals.bandwidth", b > 0.0 && b.is_finite(), "must be > 0")?;
        }
        if let Some(x) = m.ruin_level {
            require("marginals.ruin_level", x.is_finite(), "must be finite")?;
        }

        let e = &self.estimation;
        field("estimation.model", e.model.validate())?;
        field("estimation.functional", e.problem())?;
        require("estimation.sizes", !e.sizes.is_empty(), "must be nonempty")?;
        for &n in &e.sizes {
            field("estimation.sizes/beta", e.scheme(n))?;
        }
        if let Some(a) = e.alpha {
            require("estimation.alpha", a >= 1, "must be >= 1")?;
        }
        require("estimation.replications", e.replications >= 1, "must be >= 1")?;
        let o = &e.optimizer;
        require("estimation.optimizer.grid_points", o.grid_points >= 2, "must be >= 2")?;
        require("estimation.optimizer.tolerance", o.tolerance > 0.0, "must be > 0")?;
        require("estimation.optimizer.max_iterations", o.max_iterations >= 1, "must be >= 1")?;
        let q = &e.oracle;
        require("estimation.oracle.paths", q.paths >= 2, "must be >= 2")?;
        require("estimation.oracle.grid_points", q.grid_points >= 2, "must be >= 2")?;
        require("estimation.oracle.separation", (0.0..1.0).contains(&q.separation), "must lie in [0, 1)")?;
        let h = field("estimation.oracle.h", e.oracle_h())?;
        require("estimation.oracle.h", h > 0.0 && h.is_finite(), "must be > 0")?;
        Ok(())
    }
}
