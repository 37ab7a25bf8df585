//! Finite-activity Lévy laws and exact simulation of their increments on an
//! equidistant grid.
//!
//! The simulated class is drift + Brownian motion + compound Poisson jumps.
//! An increment over a step of length `h` is drawn exactly in distribution:
//! `mu*h + sigma*sqrt(h)*Z + sum_{j<=K} xi_j` with `K ~ Poisson(lambda*h)`.
//! Jump times inside a step are never needed because only increments are
//! observed.

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Simulated increments are rounded to multiples of `2^-LATTICE_BITS`.
///
/// On this dyadic lattice every partial sum with magnitude below
/// `2^(52 - LATTICE_BITS)` is exactly representable, so cumulative sums do
/// not depend on summation order: a permuted path ends at bit-identically the
/// same terminal value, and `values[k] - values[k-1]` recovers the stored
/// increment exactly. The rounding error (at most `2^-33`) is far below any
/// statistical resolution used here.
pub const LATTICE_BITS: i32 = 32;

const LATTICE_SCALE: f64 = (1u64 << LATTICE_BITS) as f64;

pub fn to_lattice(x: f64) -> f64 {
    (x * LATTICE_SCALE).round() / LATTICE_SCALE
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JumpSign {
    Up,
    Down,
}

impl JumpSign {
    pub fn factor(self) -> f64 {
        match self {
            JumpSign::Up => 1.0,
            JumpSign::Down => -1.0,
        }
    }
}

/// Law of a single (signed) jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLaw {
    /// `sign * Exp(mean)`.
    Exponential { mean: f64, sign: JumpSign },
    /// Deterministic jump of the given (signed) size.
    Constant { size: f64 },
    /// `high` with probability `p_high`, otherwise `low`.
    TwoPoint { low: f64, high: f64, p_high: f64 },
}

impl JumpLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            JumpLaw::Exponential { mean, .. } if !(mean > 0.0 && mean.is_finite()) => {
                Err(Error::param(format!("exponential jump mean must be > 0, got {mean}")))
            }
            JumpLaw::Constant { size } if !size.is_finite() => {
                Err(Error::param("constant jump size must be finite"))
            }
            JumpLaw::TwoPoint { low, high, p_high }
                if !(low.is_finite() && high.is_finite() && (0.0..=1.0).contains(&p_high)) =>
            {
                Err(Error::param("two-point jump law needs finite sizes and p_high in [0, 1]"))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::Exponential { mean, sign } => sign.factor() * mean,
            JumpLaw::Constant { size } => size,
            JumpLaw::TwoPoint { low, high, p_high } => p_high * high + (1.0 - p_high) * low,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            JumpLaw::Exponential { mean, .. } => 2.0 * mean * mean,
            JumpLaw::Constant { size } => size * size,
            JumpLaw::TwoPoint { low, high, p_high } => p_high * high * high + (1.0 - p_high) * low * low,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::Exponential { mean, sign } => {
                let e: f64 = Exp::new(1.0).expect("unit rate").sample(rng);
                sign.factor() * mean * e
            }
            JumpLaw::Constant { size } => size,
            JumpLaw::TwoPoint { low, high, p_high } => {
                if rng.random::<f64>() < p_high {
                    high
                } else {
                    low
                }
            }
        }
    }
}

/// Generating triplet of a finite-activity Lévy process.
///
/// The Lévy measure is `intensity * law`. Because the activity is finite the
/// drift needs no truncation compensator: `drift` is the coefficient of `t`
/// in `X_t = drift*t + sigma*W_t + (compound Poisson)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyTriplet {
    pub drift: f64,
    pub gaussian_sigma: f64,
    pub intensity: f64,
    pub jump_law: JumpLaw,
}

impl LevyTriplet {
    pub fn new(drift: f64, gaussian_sigma: f64, intensity: f64, jump_law: JumpLaw) -> Result<Self> {
        let t = Self {
            drift,
            gaussian_sigma,
            intensity,
            jump_law,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.drift.is_finite() {
            return Err(Error::param("drift must be finite"));
        }
        if !(self.gaussian_sigma >= 0.0 && self.gaussian_sigma.is_finite()) {
            return Err(Error::param(format!(
                "gaussian sigma must be >= 0, got {}",
                self.gaussian_sigma
            )));
        }
        if !(self.intensity >= 0.0 && self.intensity.is_finite()) {
            return Err(Error::param(format!(
                "jump intensity must be >= 0, got {}",
                self.intensity
            )));
        }
        self.jump_law.validate()
    }

    /// `E[X_1 - X_0]`.
    pub fn mean_rate(&self) -> f64 {
        self.drift + self.intensity * self.jump_law.mean()
    }

    /// `Var[X_1 - X_0]`.
    pub fn variance_rate(&self) -> f64 {
        self.gaussian_sigma * self.gaussian_sigma + self.intensity * self.jump_law.second_moment()
    }

    /// One exact draw of `X_{t+h} - X_t`, before lattice rounding.
    pub fn sample_increment<R: Rng + ?Sized>(&self, h: f64, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        let mut dx = self.drift * h + self.gaussian_sigma * h.sqrt() * z;
        let rate = self.intensity * h;
        if rate > 0.0 {
            let count: f64 = Poisson::new(rate).expect("positive finite rate").sample(rng);
            for _ in 0..count as u64 {
                dx += self.jump_law.sample(rng);
            }
        }
        dx
    }
}

/// `X_t = u + mu*t + sigma*W_t + sign * sum_{i <= N_t} xi_i` with
/// `N` Poisson(lambda) and `xi_i ~ Exp(mean = jump_mean)`.
///
/// With `jump_sign = Down` this is the surplus-type jump-diffusion used
/// throughout the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpDiffusionModel {
    pub u0: f64,
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub jump_mean: f64,
    #[serde(default = "default_sign")]
    pub jump_sign: JumpSign,
}

fn default_sign() -> JumpSign {
    JumpSign::Down
}

impl JumpDiffusionModel {
    pub fn new(u0: f64, mu: f64, sigma: f64, lambda: f64, jump_mean: f64, jump_sign: JumpSign) -> Result<Self> {
        let m = Self {
            u0,
            mu,
            sigma,
            lambda,
            jump_mean,
            jump_sign,
        };
        m.validate()?;
        Ok(m)
    }

    /// Parameters `(mu, sigma, lambda, m, u)` with downward jumps.
    pub fn surplus(mu: f64, sigma: f64, lambda: f64, jump_mean: f64, u0: f64) -> Result<Self> {
        Self::new(u0, mu, sigma, lambda, jump_mean, JumpSign::Down)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.u0.is_finite() {
            return Err(Error::param("start value u0 must be finite"));
        }
        self.triplet().validate()
    }

    pub fn triplet(&self) -> LevyTriplet {
        LevyTriplet {
            drift: self.mu,
            gaussian_sigma: self.sigma,
            intensity: self.lambda,
            jump_law: JumpLaw::Exponential {
                mean: self.jump_mean,
                sign: self.jump_sign,
            },
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.sigma == 0.0 && self.lambda == 0.0
    }
}

/// Equidistant observation grid `t_k = k*h`, `k = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingScheme {
    n: usize,
    h: f64,
}

impl SamplingScheme {
    pub fn new(n: usize, h: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("sampling scheme needs n >= 1"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param(format!("grid spacing must be > 0, got {h}")));
        }
        Ok(Self { n, h })
    }

    /// High-frequency long-term family: `h = n^{-beta}`, `beta` in (0, 1).
    pub fn hflt(n: usize, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::param(format!("beta must lie in (0, 1), got {beta}")));
        }
        Self::new(n, (n as f64).powf(-beta))
    }

    /// Scheme with spacing `h` covering `[0, horizon]` (`n = round(horizon/h)`).
    pub fn covering(horizon: f64, h: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::param(format!("horizon must be > 0, got {horizon}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param(format!("grid spacing must be > 0, got {h}")));
        }
        Self::new(((horizon / h).round() as usize).max(1), h)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn horizon(&self) -> f64 {
        self.n as f64 * self.h
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.h
    }
}

/// Draws `scheme.n` iid increments from `rng`, rounded to the lattice.
pub fn sample_increments<R: Rng + ?Sized>(law: &LevyTriplet, scheme: &SamplingScheme, rng: &mut R) -> Vec<f64> {
    (0..scheme.n)
        .map(|_| to_lattice(law.sample_increment(scheme.h, rng)))
        .collect()
}

/// The observed increment vector `(X_{t_k} - X_{t_{k-1}})_{k=1..n}` of one
/// simulated path. Deterministic in `seed`.
pub fn simulate_increments(model: &JumpDiffusionModel, scheme: &SamplingScheme, seed: u64) -> Result<Vec<f64>> {
    model.validate()?;
    let mut rng = rng::stream(seed, 0);
    Ok(sample_increments(&model.triplet(), scheme, &mut rng))
}

/// Exact mean and variance of `X_t`.
pub fn exact_marginal_moments(model: &JumpDiffusionModel, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    let law = model.triplet();
    Ok((model.u0 + law.mean_rate() * t, law.variance_rate() * t))
}
