//! Sources of paths for empirical measures.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::{PathFunctional, Truncation};
use crate::levy_model::{to_lattice, JumpDiffusionModel, LevyTriplet, SamplingScheme};
use crate::path::SteppedPath;
use crate::quasi::QuasiEnsemble;
use crate::rng;
use crate::stats::pairwise_sum;

/// An indexed family of paths, each carrying equal weight.
pub trait PathSample: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Path `index`, possibly cut as `trunc` allows.
    fn path(&self, index: usize, trunc: &Truncation) -> Result<SteppedPath>;

    /// Whether holding all (truncated) paths in memory at once is cheap.
    fn materializable(&self) -> bool {
        true
    }
}

impl PathSample for QuasiEnsemble {
    fn len(&self) -> usize {
        self.alpha()
    }
    fn path(&self, index: usize, trunc: &Truncation) -> Result<SteppedPath> {
        self.truncated_path(index, trunc)
    }
}

impl PathSample for [SteppedPath] {
    fn len(&self) -> usize {
        <[SteppedPath]>::len(self)
    }
    fn path(&self, index: usize, trunc: &Truncation) -> Result<SteppedPath> {
        let p = self
            .get(index)
            .ok_or_else(|| Error::param(format!("path index {index} out of range")))?;
        Ok(trunc.apply(p))
    }
}

impl PathSample for Vec<SteppedPath> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }
    fn path(&self, index: usize, trunc: &Truncation) -> Result<SteppedPath> {
        self.as_slice().path(index, trunc)
    }
}

/// `count` independent paths of a model, path `i` drawn from stream
/// `(seed, i)`. Paths are regenerated on demand, and generation stops as
/// soon as the truncation allows, so long horizons cost nothing past ruin.
#[derive(Debug, Clone)]
pub struct SimulatedPaths {
    model: JumpDiffusionModel,
    law: LevyTriplet,
    scheme: SamplingScheme,
    count: usize,
    seed: u64,
}

/// Above this many stored values a simulated sample is regenerated rather
/// than held in memory.
const MATERIALIZE_LIMIT: usize = 50_000_000;

impl SimulatedPaths {
    pub fn new(model: JumpDiffusionModel, scheme: SamplingScheme, count: usize, seed: u64) -> Result<Self> {
        model.validate()?;
        if count == 0 {
            return Err(Error::param("need at least one simulated path"));
        }
        Ok(Self {
            law: model.triplet(),
            model,
            scheme,
            count,
            seed,
        })
    }

    pub fn scheme(&self) -> &SamplingScheme {
        &self.scheme
    }

    pub fn model(&self) -> &JumpDiffusionModel {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl PathSample for SimulatedPaths {
    fn len(&self) -> usize {
        self.count
    }

    fn path(&self, index: usize, trunc: &Truncation) -> Result<SteppedPath> {
        if index >= self.count {
            return Err(Error::param(format!("path index {index} out of range")));
        }
        let h = self.scheme.h();
        let steps = trunc.steps(h, self.scheme.n());
        let mut rng = rng::stream(self.seed, index as u64);
        let mut values = Vec::with_capacity(steps + 1);
        let u = self.model.u0;
        let mut sum = 0.0;
        values.push(u);
        for _ in 0..steps {
            if trunc.absorbing_level.is_some_and(|l| u + sum < l) {
                break;
            }
            sum += to_lattice(self.law.sample_increment(h, &mut rng));
            values.push(u + sum);
        }
        SteppedPath::from_values(h, values)
    }

    fn materializable(&self) -> bool {
        self.count.saturating_mul(self.scheme.n() + 1) <= MATERIALIZE_LIMIT
    }
}

/// Evaluates `theta -> mean_i h_theta(path_i)` over a sample, holding the
/// truncated paths in memory when that is cheap.
pub(crate) struct Contrast<'a> {
    f: &'a dyn PathFunctional,
    sample: &'a dyn PathSample,
    trunc: Truncation,
    stored: Option<Vec<SteppedPath>>,
}

impl<'a> Contrast<'a> {
    pub fn new(f: &'a dyn PathFunctional, sample: &'a dyn PathSample, trunc: Truncation) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::param("empty path sample"));
        }
        let stored = if sample.materializable() {
            Some(
                (0..sample.len())
                    .into_par_iter()
                    .map(|i| sample.path(i, &trunc))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        Ok(Self {
            f,
            sample,
            trunc,
            stored,
        })
    }

    pub fn len(&self) -> usize {
        self.sample.len()
    }

    /// Applies `g` to every path, in index order.
    pub fn map<T: Send>(&self, g: impl Fn(&SteppedPath) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        match &self.stored {
            Some(paths) => paths.par_iter().map(g).collect(),
            None => (0..self.sample.len())
                .into_par_iter()
                .map(|i| g(&self.sample.path(i, &self.trunc)?))
                .collect(),
        }
    }

    pub fn values(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.map(|p| self.f.evaluate(p, theta))
    }

    pub fn mean(&self, theta: &[f64]) -> Result<f64> {
        let v = pairwise_sum(&self.values(theta)?) / self.len() as f64;
        if v.is_nan() {
            return Err(Error::Numeric {
                theta: theta.to_vec(),
                message: "contrast is NaN".into(),
            });
        }
        Ok(v)
    }
}

/// `(1/N) sum_i h_theta(path_i)` with a fixed reduction order.
pub fn sample_mean(sample: &dyn PathSample, f: &dyn PathFunctional, theta: &[f64]) -> Result<f64> {
    let trunc = match crate::domain::ThetaBox::point(theta) {
        Ok(b) if f.dim() > 0 => f.truncation(&b),
        _ => Truncation::default(),
    };
    Contrast::new(f, sample, trunc)?.mean(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::simulate_increments;

    #[test]
    fn simulated_path_matches_increment_simulation() {
        let model = JumpDiffusionModel::surplus(20.0, 10.0, 5.0, 3.0, 0.0).unwrap();
        let scheme = SamplingScheme::new(50, 0.1).unwrap();
        let s = SimulatedPaths::new(model, scheme, 3, 9).unwrap();
        let p = s.path(0, &Truncation::default()).unwrap();
        let inc = simulate_increments(&model, &scheme, 9).unwrap();
        assert_eq!(p, SteppedPath::from_increments(0.0, 0.1, &inc).unwrap());
        let short = s
            .path(
                0,
                &Truncation {
                    horizon: Some(1.0),
                    absorbing_level: None,
                },
            )
            .unwrap();
        assert_eq!(short.values(), &p.values()[..=short.steps()]);
        assert!(short.horizon() >= 1.0);
    }

    #[test]
    fn absorption_stops_generation() {
        let model = JumpDiffusionModel::surplus(0.0, 10.0, 0.0, 1.0, 0.0).unwrap();
        let scheme = SamplingScheme::new(1000, 0.1).unwrap();
        let s = SimulatedPaths::new(model, scheme, 1, 1).unwrap();
        let t = Truncation {
            horizon: None,
            absorbing_level: Some(0.0),
        };
        let p = s.path(0, &t).unwrap();
        let full = s.path(0, &Truncation::default()).unwrap();
        assert_eq!(p.values(), &full.values()[..p.values().len()]);
        assert_eq!(p, t.apply(&full));
    }
}
