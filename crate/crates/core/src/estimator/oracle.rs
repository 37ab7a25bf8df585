//! Monte-Carlo reference estimates from independently simulated true paths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optimize::{minimize_contrast, ContrastProblem, EstimatorResult, OptimizerOptions};
use super::sample::{Contrast, PathSample, SimulatedPaths};
use crate::domain::{ThetaBox, UniformGrid};
use crate::error::{Error, Result};
use crate::functionals::{GridProfiler, PathFunctional, PointwiseProfiler};
use crate::levy_model::{JumpDiffusionModel, SamplingScheme};
use crate::stats;

/// Paths booked into one buffer before buffers are merged (in index order).
const CHUNK: usize = 512;

/// `argmin P*_B h_theta` where `P*_B` is the empirical measure of `b`
/// independent model paths on `scheme`.
pub fn oracle_estimate(
    model: &JumpDiffusionModel,
    scheme: &SamplingScheme,
    functional: &dyn PathFunctional,
    domain: &ThetaBox,
    b: usize,
    seed: u64,
    opts: &OptimizerOptions,
) -> Result<EstimatorResult> {
    let sample = SimulatedPaths::new(*model, *scheme, b, seed)?;
    let problem = ContrastProblem::new(&sample, functional, domain.clone())?;
    minimize_contrast(&problem, opts)
}

/// Contrast of a path sample on every point of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridProfile {
    pub grid: Vec<f64>,
    /// Mean over all paths.
    pub contrast: Vec<f64>,
    /// Means over the first and second half of the path indices.
    pub halves: [Vec<f64>; 2],
    pub paths: usize,
}

impl GridProfile {
    pub fn argmin(&self) -> usize {
        argmin(&self.contrast)
    }

    pub fn resolution(&self) -> f64 {
        if self.grid.len() < 2 {
            0.0
        } else {
            self.grid[1] - self.grid[0]
        }
    }
}

/// First index of the smallest value.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Sums `h_theta` over paths `range` of `sample` on the profiler's grid.
fn profile_sums(profiler: &dyn GridProfiler, sample: &dyn PathSample, trunc: &crate::functionals::Truncation, range: std::ops::Range<usize>) -> Result<Vec<f64>> {
    let starts: Vec<usize> = range.clone().step_by(CHUNK).collect();
    let buffers = starts
        .par_iter()
        .map(|&s| {
            let mut buf = profiler.buffer();
            for i in s..(s + CHUNK).min(range.end) {
                profiler.accumulate(&sample.path(i, trunc)?, &mut buf)?;
            }
            Ok(buf)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = profiler.buffer();
    for b in &buffers {
        total.merge(b);
    }
    Ok(profiler.finish(&total))
}

/// Evaluates the contrast of `sample` on `grid`, using the functional's
/// fast profiler when it has one. Paths must share spacing `h`.
pub fn grid_profile(sample: &dyn PathSample, f: &dyn PathFunctional, grid: &UniformGrid, h: f64, region: &ThetaBox) -> Result<GridProfile> {
    let fast = f.grid_profiler(grid, h);
    let profiler: Box<dyn GridProfiler + '_> = match fast {
        Some(p) => p,
        None => Box::new(PointwiseProfiler::new(f, grid)),
    };
    let trunc = f.truncation(region);
    let b = sample.len();
    let mid = b / 2;
    let first = profile_sums(profiler.as_ref(), sample, &trunc, 0..mid)?;
    let second = profile_sums(profiler.as_ref(), sample, &trunc, mid..b)?;
    let contrast = first.iter().zip(&second).map(|(a, c)| (a + c) / b as f64).collect();
    let halves = [
        first.iter().map(|v| v / mid as f64).collect(),
        second.iter().map(|v| v / (b - mid) as f64).collect(),
    ];
    Ok(GridProfile {
        grid: grid.points().to_vec(),
        contrast,
        halves,
        paths: b,
    })
}

/// Whether the reference contrast has a well separated global minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Identifiability {
    /// `min_{|theta - theta0| >= separation * width} C(theta) - C(theta0)`.
    pub margin: f64,
    /// `3 sd(h_theta1 - h_theta0) / sqrt(B)` for the competitor `theta1`
    /// attaining the margin.
    pub noise: f64,
    pub separation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseOracle {
    pub theta0: f64,
    pub contrast_at_min: f64,
    pub profile: GridProfile,
    /// Grid minimizers of the two half-samples.
    pub half_minimizers: [f64; 2],
    pub identifiability: Identifiability,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseOracleOptions {
    pub paths: usize,
    pub grid_points: usize,
    pub h: f64,
    pub seed: u64,
    pub separation: f64,
}

/// Reference minimizer on a dense grid over a one-dimensional domain, from
/// `opts.paths` independent paths of the model at spacing `opts.h`.
pub fn dense_grid_oracle(
    model: &JumpDiffusionModel,
    f: &dyn PathFunctional,
    domain: &ThetaBox,
    opts: &DenseOracleOptions,
) -> Result<DenseOracle> {
    if domain.dim() != 1 {
        return Err(Error::param("the dense-grid oracle needs a one-dimensional domain"));
    }
    let trunc = f.truncation(domain);
    if trunc.horizon.is_none() {
        return Err(Error::param("the dense-grid oracle needs a functional with a finite horizon"));
    }
    let scheme = SamplingScheme::new(trunc.steps(opts.h, usize::MAX), opts.h)?;
    let sample = SimulatedPaths::new(*model, scheme, opts.paths, opts.seed)?;
    let grid = UniformGrid::new(domain.lower()[0], domain.upper()[0], opts.grid_points)?;
    let profile = grid_profile(&sample, f, &grid, opts.h, domain)?;
    let best = profile.argmin();
    let theta0 = profile.grid[best];
    let c0 = profile.contrast[best];
    if !c0.is_finite() {
        return Err(Error::Numeric {
            theta: vec![theta0],
            message: "oracle contrast is not finite".into(),
        });
    }
    let half_minimizers = [
        profile.grid[argmin(&profile.halves[0])],
        profile.grid[argmin(&profile.halves[1])],
    ];

    // Margin against the best well-separated competitor; its noise is the
    // standard error of the paired difference h_competitor - h_theta0.
    let width = domain.width(0);
    let competitor = profile
        .grid
        .iter()
        .zip(&profile.contrast)
        .enumerate()
        .filter(|(_, (t, _))| (**t - theta0).abs() >= opts.separation * width)
        .min_by(|a, b| a.1 .1.total_cmp(b.1 .1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i);
    let (margin, noise) = match competitor {
        Some(j) => {
            let theta1 = profile.grid[j];
            let trunc = f.truncation(&ThetaBox::interval(theta0.min(theta1), theta0.max(theta1))?);
            let contrast = Contrast::new(f, &sample, trunc)?;
            let diffs = contrast.map(|p| Ok(f.evaluate(p, &[theta1])? - f.evaluate(p, &[theta0])?))?;
            let sd = stats::variance(&diffs).sqrt();
            (profile.contrast[j] - c0, 3.0 * sd / (opts.paths as f64).sqrt())
        }
        None => (f64::INFINITY, 0.0),
    };
    Ok(DenseOracle {
        theta0,
        contrast_at_min: c0,
        half_minimizers,
        identifiability: Identifiability {
            margin,
            noise,
            separation: opts.separation,
            passed: margin > noise,
        },
        profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{DiscountedLoss, DividendParams, Negated, QuadraticAtTime};

    #[test]
    fn single_path_oracle_is_single_path_minimization() {
        let model = JumpDiffusionModel::surplus(1.0, 2.0, 0.5, 1.0, 0.0).unwrap();
        let scheme = SamplingScheme::new(20, 0.5).unwrap();
        let f = QuadraticAtTime::default();
        let dom = ThetaBox::interval(-50.0, 50.0).unwrap();
        let r = oracle_estimate(&model, &scheme, &f, &dom, 1, 4, &OptimizerOptions::default()).unwrap();
        let p = SimulatedPaths::new(model, scheme, 1, 4).unwrap();
        let x = p.path(0, &Default::default()).unwrap().terminal();
        assert!((r.theta_hat[0] - x).abs() < 1e-6);
    }

    #[test]
    fn deterministic_model_oracle_ignores_b() {
        let model = JumpDiffusionModel::surplus(1.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        let scheme = SamplingScheme::new(10, 0.5).unwrap();
        let f = QuadraticAtTime::default();
        let dom = ThetaBox::interval(0.0, 10.0).unwrap();
        let a = oracle_estimate(&model, &scheme, &f, &dom, 1, 1, &OptimizerOptions::default()).unwrap();
        let b = oracle_estimate(&model, &scheme, &f, &dom, 17, 2, &OptimizerOptions::default()).unwrap();
        assert_eq!(a.theta_hat, b.theta_hat);
        assert!((a.theta_hat[0] - 5.0).abs() < 1e-6);
    }

    #[test]
    fn dense_oracle_fast_and_pointwise_agree() {
        let model = JumpDiffusionModel::surplus(20.0, 10.0, 5.0, 3.0, 10.0).unwrap();
        let p = DividendParams {
            theta_max: 6.0,
            ..DividendParams::default()
        };
        let f = Negated(DiscountedLoss::mollified_dividend(&p).unwrap());
        let dom = p.domain().unwrap();
        let opts = DenseOracleOptions {
            paths: 600,
            grid_points: 200,
            h: 0.05,
            seed: 3,
            separation: 0.05,
        };
        let fast = dense_grid_oracle(&model, &f, &dom, &opts).unwrap();
        let grid = UniformGrid::new(1.0, 6.0, 200).unwrap();
        let scheme = SamplingScheme::new(f.truncation(&dom).steps(0.05, usize::MAX), 0.05).unwrap();
        let sample = SimulatedPaths::new(model, scheme, 600, 3).unwrap();
        for (i, theta) in grid.points().iter().enumerate().step_by(17) {
            let direct = super::super::sample::sample_mean(&sample, &f, &[*theta]).unwrap();
            assert!((direct - fast.profile.contrast[i]).abs() < 1e-10);
        }
        assert!(fast.profile.grid.contains(&fast.theta0));
    }
}
