//! Distributional checks of quasi-paths against the process law.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_model::{simulate_increments, to_lattice, JumpDiffusionModel, SamplingScheme};
use crate::path::SteppedPath;
use crate::quasi::QuasiEnsemble;
use crate::rng::{self, derive_seed};
use crate::stats;

/// Sorted sample with its moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub samples: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

impl SampleSummary {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::param("empty sample"));
        }
        Ok(Self {
            samples: stats::sorted(samples),
            mean: stats::mean(samples),
            variance: stats::variance(samples),
        })
    }

    /// Empirical distribution function `#{x_i <= x} / n`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|v| *v <= x) as f64 / self.samples.len() as f64
    }
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::param("KS statistic needs two nonempty samples"));
    }
    let (a, b) = (stats::sorted(a), stats::sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // step both ECDFs past the next value, including all ties
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    /// `0.9 min(sd, IQR / 1.34) n^{-1/5}`.
    Silverman,
    Fixed(f64),
}

/// Gaussian kernel density estimate tabulated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kde {
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl Kde {
    /// Trapezoid-rule integral of the tabulated density.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }
}

pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let sorted = stats::sorted(samples);
    let sd = stats::variance(samples).sqrt();
    let iqr = stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25);
    let mut spread = sd.min(iqr / 1.34);
    if !(spread > 0.0) {
        spread = sd;
    }
    if !(spread > 0.0) {
        // all samples equal: any positive width gives a unit-mass bump
        spread = sorted[0].abs().max(1.0) * 1e-3;
    }
    0.9 * spread * (samples.len() as f64).powf(-0.2)
}

/// Gaussian KDE on `points` equally spaced values covering
/// `[min - 4 bw, max + 4 bw]`.
pub fn kde(samples: &[f64], bandwidth: Bandwidth, points: usize) -> Result<Kde> {
    if samples.len() < 2 {
        return Err(Error::param("density estimate needs at least 2 samples"));
    }
    if points < 2 {
        return Err(Error::param("density grid needs at least 2 points"));
    }
    let bw = match bandwidth {
        Bandwidth::Silverman => silverman_bandwidth(samples),
        Bandwidth::Fixed(b) if b > 0.0 && b.is_finite() => b,
        Bandwidth::Fixed(b) => return Err(Error::param(format!("bandwidth must be > 0, got {b}"))),
    };
    let sorted = stats::sorted(samples);
    let lo = sorted[0] - 4.0 * bw;
    let hi = sorted[sorted.len() - 1] + 4.0 * bw;
    let grid = stats::linspace(lo, hi, points);
    let norm = 1.0 / (samples.len() as f64 * bw * (2.0 * std::f64::consts::PI).sqrt());
    let density = grid
        .par_iter()
        .map(|x| {
            let terms: Vec<f64> = sorted
                .iter()
                .map(|s| {
                    let z = (x - s) / bw;
                    (-0.5 * z * z).exp()
                })
                .collect();
            norm * stats::pairwise_sum(&terms)
        })
        .collect();
    Ok(Kde {
        bandwidth: bw,
        grid,
        density,
    })
}

/// `X_t` of the model at the grid time `t_k = k h` (`k` the step containing
/// `t`), drawn as the sum of `k` independent lattice increments; one draw
/// per stream `(seed, b)`.
pub fn oracle_marginal(model: &JumpDiffusionModel, h: f64, t: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    model.validate()?;
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be >= 0, got {t}")));
    }
    let probe = SteppedPath::from_values(h, vec![0.0; (t / h).floor() as usize + 2])?;
    let k = probe.step_index(t)?;
    let law = model.triplet();
    Ok((0..count as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream(seed, b);
            let mut sum = 0.0;
            for _ in 0..k {
                sum += to_lattice(law.sample_increment(h, &mut rng));
            }
            model.u0 + sum
        })
        .collect())
}

/// Quasi-path values at time `t` and oracle draws of `X_t` for one seed.
pub fn quasi_marginal_samples(
    model: &JumpDiffusionModel,
    scheme: &SamplingScheme,
    t: f64,
    alpha: usize,
    oracle_b: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(t >= 0.0 && t <= scheme.horizon()) {
        return Err(Error::domain(format!("time {t} outside [0, {}]", scheme.horizon())));
    }
    let increments = simulate_increments(model, scheme, derive_seed(seed, 1))?;
    let ensemble = QuasiEnsemble::sampled(increments, model.u0, scheme.h(), alpha, derive_seed(seed, 2))?;
    let steps = ((t / scheme.h()).floor() as usize + 1).min(scheme.n());
    let quasi = (0..alpha)
        .into_par_iter()
        .map(|i| ensemble.quasi_path_prefix(i, steps)?.value_at(t))
        .collect::<Result<Vec<f64>>>()?;
    let oracle = oracle_marginal(model, scheme.h(), t, oracle_b, derive_seed(seed, 3))?;
    Ok((quasi, oracle))
}

/// KS distance between the quasi-path marginal at `t` (fresh increments
/// and ensemble) and `oracle_b` independent draws of `X_t`.
pub fn quasi_marginal_distance(
    model: &JumpDiffusionModel,
    scheme: &SamplingScheme,
    t: f64,
    alpha: usize,
    oracle_b: usize,
    seed: u64,
) -> Result<f64> {
    let (quasi, oracle) = quasi_marginal_samples(model, scheme, t, alpha, oracle_b, seed)?;
    ks_statistic(&quasi, &oracle)
}

/// KS distance between ruin times of quasi-paths and of independent model
/// paths on the same scheme.
pub fn quasi_ruin_distance(
    model: &JumpDiffusionModel,
    scheme: &SamplingScheme,
    xi: f64,
    alpha: usize,
    oracle_b: usize,
    seed: u64,
) -> Result<f64> {
    let increments = simulate_increments(model, scheme, derive_seed(seed, 1))?;
    let ensemble = QuasiEnsemble::sampled(increments, model.u0, scheme.h(), alpha, derive_seed(seed, 2))?;
    let quasi = (0..alpha)
        .into_par_iter()
        .map(|i| Ok(ensemble.quasi_path(i)?.ruin_time(xi)))
        .collect::<Result<Vec<f64>>>()?;
    let oracle_seed = derive_seed(seed, 4);
    let oracle = (0..oracle_b as u64)
        .into_par_iter()
        .map(|b| {
            let inc = simulate_increments(model, scheme, derive_seed(oracle_seed, b))?;
            Ok(SteppedPath::from_increments(model.u0, scheme.h(), &inc)?.ruin_time(xi))
        })
        .collect::<Result<Vec<f64>>>()?;
    ks_statistic(&quasi, &oracle)
}

/// `E[|Xhat_{t_k} - X_{t_k}|^p]^{1/p}` over `replications` pairs, each with
/// fresh increments shared by both paths and a fresh uniform permutation.
pub fn lp_increment_distance(
    model: &JumpDiffusionModel,
    scheme: &SamplingScheme,
    k: usize,
    p: f64,
    replications: usize,
    seed: u64,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::param(format!("p must be >= 1, got {p}")));
    }
    if k > scheme.n() {
        return Err(Error::param(format!("index {k} beyond n = {}", scheme.n())));
    }
    if replications == 0 {
        return Err(Error::param("need at least one replication"));
    }
    let terms = (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let inc = simulate_increments(model, scheme, derive_seed(seed, 2 * r))?;
            let mut order: Vec<usize> = (0..inc.len()).collect();
            order.shuffle(&mut rng::stream(derive_seed(seed, 2 * r + 1), 0));
            let x = model.u0 + inc[..k].iter().sum::<f64>();
            let xhat = model.u0 + order[..k].iter().map(|&i| inc[i]).sum::<f64>();
            Ok((xhat - x).abs().powf(p))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(stats::mean(&terms).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
    }

    #[test]
    fn ks_basic_cases() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[0.0; 5], &[1.0; 7]).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[1.0, 2.0], &[2.0, 3.0]).unwrap(), 0.5);
        assert!(ks_statistic(&[], &a).is_err());
        let (x, y) = (normals(300, 1), normals(200, 2));
        assert_eq!(ks_statistic(&x, &y).unwrap(), ks_statistic(&y, &x).unwrap());
    }

    #[test]
    fn ks_same_law_is_small() {
        let (x, y) = (normals(10_000, 3), normals(10_000, 4));
        assert!(ks_statistic(&x, &y).unwrap() < 0.03);
    }

    #[test]
    fn kde_symmetry_and_mass() {
        let k = kde(&[-1.0, 1.0], Bandwidth::Silverman, 512).unwrap();
        let n = k.density.len();
        for i in 0..n {
            assert!((k.density[i] - k.density[n - 1 - i]).abs() < 1e-12);
        }
        assert!((k.integral() - 1.0).abs() < 1e-3);
        assert!(kde(&[1.0], Bandwidth::Silverman, 512).is_err());
        let flat = kde(&[2.0, 2.0, 2.0], Bandwidth::Silverman, 512).unwrap();
        assert!((flat.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn kde_recovers_normal_density() {
        let k = kde(&normals(100_000, 5), Bandwidth::Silverman, 512).unwrap();
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let dev = k.grid.iter().zip(&k.density).map(|(x, d)| (d - pdf(*x)).abs()).fold(0.0, f64::max);
        assert!(dev <= 0.02, "max deviation {dev}");
        assert!((k.integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn degenerate_model_marginals_coincide() {
        let model = JumpDiffusionModel::surplus(1.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        let scheme = SamplingScheme::new(100, 0.1).unwrap();
        assert_eq!(quasi_marginal_distance(&model, &scheme, 1.0, 50, 50, 7).unwrap(), 0.0);
        assert_eq!(quasi_ruin_distance(&model, &scheme, -1.0, 20, 20, 7).unwrap(), 0.0);
    }

    #[test]
    fn lp_distance_edge_cases() {
        let model = JumpDiffusionModel::surplus(20.0, 10.0, 5.0, 3.0, 0.0).unwrap();
        let scheme = SamplingScheme::new(100, 0.1).unwrap();
        assert_eq!(lp_increment_distance(&model, &scheme, 100, 2.0, 50, 1).unwrap(), 0.0);
        let one = SamplingScheme::new(1, 0.1).unwrap();
        assert_eq!(lp_increment_distance(&model, &one, 1, 2.0, 50, 1).unwrap(), 0.0);
        assert!(lp_increment_distance(&model, &scheme, 10, 2.0, 50, 1).unwrap() > 0.0);
        assert!(lp_increment_distance(&model, &scheme, 101, 2.0, 50, 1).is_err());
    }
}
