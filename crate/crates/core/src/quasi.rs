//! Quasi-paths: the observed increments replayed in permuted order.
//!
//! A [`QuasiEnsemble`] pairs one observed increment vector with a set of
//! permutations. Each permutation yields a step path starting at the same
//! point, and the uniform measure over those paths is the empirical measure
//! whose contrast the estimator minimizes.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::domain::ThetaBox;
use crate::functionals::{PathFunctional, Truncation};
use crate::path::SteppedPath;
use crate::rng;
use crate::stats::pairwise_sum;

/// Largest `n` for which all `n!` permutations may be enumerated.
pub const MAX_ENUMERATION: usize = 8;

/// A bijection of `{0, .., n-1}`; position `k` of a quasi-path receives the
/// increment with index `mapping[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Permutation(Vec<u32>);

impl Permutation {
    pub fn new(mapping: Vec<u32>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &i in &mapping {
            let i = i as usize;
            if i >= n || seen[i] {
                return Err(Error::param(format!("not a permutation of 0..{n}: {mapping:?}")));
            }
            seen[i] = true;
        }
        Ok(Self(mapping))
    }

    /// From the 1-based notation `(i(1), .., i(n))`.
    pub fn from_one_based(mapping: &[u32]) -> Result<Self> {
        if mapping.contains(&0) {
            return Err(Error::param("one-based permutation contains 0"));
        }
        Self::new(mapping.iter().map(|i| i - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n as u32).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mapping(&self) -> &[u32] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(k, &i)| k == i as usize)
    }

    /// `(values[i(1)], .., values[i(n)])`.
    pub fn apply<'a>(&'a self, values: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.0.iter().map(move |&i| values[i as usize])
    }

    /// Rearranges to the lexicographically next permutation; returns false
    /// (leaving the sequence sorted ascending) after the last one.
    fn advance(&mut self) -> bool {
        let v = &mut self.0;
        if v.len() < 2 {
            return false;
        }
        let mut i = v.len() - 1;
        while i > 0 && v[i - 1] >= v[i] {
            i -= 1;
        }
        if i == 0 {
            v.reverse();
            return false;
        }
        let mut j = v.len() - 1;
        while v[j] <= v[i - 1] {
            j -= 1;
        }
        v.swap(i - 1, j);
        v[i..].reverse();
        true
    }
}

/// `alpha` independent uniform permutations of `n` items (Fisher–Yates),
/// deterministic in `seed`. Repetitions are allowed.
pub fn sample_permutation_set(n: usize, alpha: usize, seed: u64) -> Result<Vec<Permutation>> {
    if n == 0 {
        return Err(Error::param("permutations need n >= 1"));
    }
    if alpha == 0 {
        return Err(Error::param("permutation set needs alpha >= 1"));
    }
    let mut rng = rng::stream(seed, 0);
    Ok((0..alpha)
        .map(|_| {
            let mut p: Vec<u32> = (0..n as u32).collect();
            p.shuffle(&mut rng);
            Permutation(p)
        })
        .collect())
}

/// All `n!` permutations in lexicographic order; refuses `n > 8`.
pub fn enumerate_all_permutations(n: usize) -> Result<Vec<Permutation>> {
    if n > MAX_ENUMERATION {
        return Err(Error::Refused(format!(
            "enumerating {n}! permutations exceeds the limit n <= {MAX_ENUMERATION}"
        )));
    }
    let total: usize = (1..=n).product();
    let mut out = Vec::with_capacity(total);
    let mut p = Permutation::identity(n);
    loop {
        out.push(p.clone());
        if !p.advance() {
            break;
        }
    }
    Ok(out)
}

/// Default resampling size `floor(r^2 / ln r)` for the reporting rate
/// `r = n^{beta/p}` with `p = dim + 1/2`; at least 1.
pub fn default_alpha(n: usize, beta: f64, dim: usize) -> usize {
    let r = reporting_rate(n, beta, dim);
    if r <= std::f64::consts::E {
        return 1;
    }
    ((r * r / r.ln()).floor() as usize).max(1)
}

/// `n^{beta/p}` with `p = dim + 1/2`.
pub fn reporting_rate(n: usize, beta: f64, dim: usize) -> f64 {
    let p = dim.max(1) as f64 + 0.5;
    (n as f64).powf(beta / p)
}

/// Observed increments together with the permutation set `A_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiEnsemble {
    increments: Vec<f64>,
    start: f64,
    h: f64,
    perms: Vec<Permutation>,
}

impl QuasiEnsemble {
    pub fn new(increments: Vec<f64>, start: f64, h: f64, perms: Vec<Permutation>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param(format!("grid spacing must be > 0, got {h}")));
        }
        if perms.is_empty() {
            return Err(Error::param("ensemble needs at least one permutation"));
        }
        if let Some(bad) = perms.iter().find(|p| p.len() != increments.len()) {
            return Err(Error::param(format!(
                "permutation of length {} for {} increments",
                bad.len(),
                increments.len()
            )));
        }
        Ok(Self {
            increments,
            start,
            h,
            perms,
        })
    }

    /// Ensemble over `alpha` uniformly sampled permutations.
    pub fn sampled(increments: Vec<f64>, start: f64, h: f64, alpha: usize, seed: u64) -> Result<Self> {
        let perms = sample_permutation_set(increments.len(), alpha, seed)?;
        Self::new(increments, start, h, perms)
    }

    /// Ensemble over all `n!` permutations (`n <= 8`).
    pub fn exhaustive(increments: Vec<f64>, start: f64, h: f64) -> Result<Self> {
        let perms = enumerate_all_permutations(increments.len())?;
        Self::new(increments, start, h, perms)
    }

    pub fn alpha(&self) -> usize {
        self.perms.len()
    }

    pub fn n(&self) -> usize {
        self.increments.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn permutations(&self) -> &[Permutation] {
        &self.perms
    }

    /// The observed (identity-order) path.
    pub fn observed_path(&self) -> SteppedPath {
        SteppedPath::from_increments(self.start, self.h, &self.increments).expect("validated spacing")
    }

    pub fn quasi_path(&self, index: usize) -> Result<SteppedPath> {
        self.quasi_path_prefix(index, self.n())
    }

    /// First `steps` steps of member `index`.
    pub fn quasi_path_prefix(&self, index: usize, steps: usize) -> Result<SteppedPath> {
        let perm = self.perms.get(index).ok_or_else(|| {
            Error::param(format!("member index {index} out of range (alpha = {})", self.alpha()))
        })?;
        let steps = steps.min(self.n());
        SteppedPath::from_increment_iter(
            self.start,
            self.h,
            perm.mapping()[..steps].iter().map(|&i| self.increments[i as usize]),
        )
    }

    /// Members materialized up to time `horizon` (whole paths when `None`).
    pub fn materialize(&self, horizon: Option<f64>) -> Vec<SteppedPath> {
        let steps = horizon.map_or(self.n(), |t| ((t / self.h).ceil() as usize).min(self.n()));
        (0..self.alpha())
            .into_par_iter()
            .map(|i| self.quasi_path_prefix(i, steps).expect("index in range"))
            .collect()
    }

    /// Member `index` cut as far as `trunc` allows.
    pub fn truncated_path(&self, index: usize, trunc: &Truncation) -> Result<SteppedPath> {
        let path = self.quasi_path_prefix(index, trunc.steps(self.h, self.n()))?;
        Ok(match trunc.absorbing_level {
            Some(_) => trunc.apply(&path),
            None => path,
        })
    }

    /// `P_n f_theta = (1/alpha) sum_i f_theta(quasi path i)`, reduced in a
    /// fixed order.
    pub fn empirical_expectation<F: PathFunctional + ?Sized>(&self, f: &F, theta: &[f64]) -> Result<f64> {
        let trunc = match ThetaBox::point(theta) {
            Ok(b) if f.dim() > 0 => f.truncation(&b),
            _ => Truncation::default(),
        };
        let values = (0..self.alpha())
            .into_par_iter()
            .map(|i| f.evaluate(&self.truncated_path(i, &trunc)?, theta))
            .collect::<Result<Vec<f64>>>()?;
        Ok(pairwise_sum(&values) / values.len() as f64)
    }
}

/// Free-function form of [`QuasiEnsemble::empirical_expectation`].
pub fn empirical_expectation<F: PathFunctional + ?Sized>(ensemble: &QuasiEnsemble, f: &F, theta: &[f64]) -> Result<f64> {
    ensemble.empirical_expectation(f, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![0, 2, 1]).is_ok());
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
        assert_eq!(Permutation::from_one_based(&[3, 1, 2]).unwrap().mapping(), &[2, 0, 1]);
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
    }

    #[test]
    fn quasi_path_by_hand() {
        let perm = Permutation::from_one_based(&[3, 1, 2]).unwrap();
        let e = QuasiEnsemble::new(vec![1.0, -2.0, 3.0], 0.0, 1.0, vec![Permutation::identity(3), perm]).unwrap();
        assert_eq!(e.quasi_path(0).unwrap(), e.observed_path());
        assert_eq!(e.quasi_path(1).unwrap().values(), &[0.0, 3.0, 4.0, 2.0]);
        assert_eq!(e.quasi_path(1).unwrap().terminal(), e.observed_path().terminal());
        assert!(e.quasi_path(2).is_err());
        assert_eq!(e.quasi_path_prefix(1, 2).unwrap().values(), &[0.0, 3.0, 4.0]);
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(enumerate_all_permutations(1).unwrap(), vec![Permutation::identity(1)]);
        let three: Vec<Vec<u32>> = enumerate_all_permutations(3)
            .unwrap()
            .into_iter()
            .map(|p| p.mapping().to_vec())
            .collect();
        assert_eq!(
            three,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
        assert_eq!(enumerate_all_permutations(8).unwrap().len(), 40_320);
        assert!(matches!(enumerate_all_permutations(9), Err(Error::Refused(_))));
        assert_eq!(enumerate_all_permutations(0).unwrap().len(), 1);
    }

    #[test]
    fn sampling_contract() {
        let ids = sample_permutation_set(1, 5, 3).unwrap();
        assert!(ids.iter().all(Permutation::is_identity));
        let a = sample_permutation_set(52, 100, 11).unwrap();
        let b = sample_permutation_set(52, 100, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| Permutation::new(p.mapping().to_vec()).is_ok()));
        assert!(sample_permutation_set(0, 1, 0).is_err());
        assert!(sample_permutation_set(3, 0, 0).is_err());
    }

    #[test]
    fn sampled_permutations_are_uniform() {
        // Six outcomes, 6000 draws: each count within 3 binomial standard errors of 1000.
        let perms = sample_permutation_set(3, 6000, 77).unwrap();
        let mut counts: HashMap<Vec<u32>, usize> = HashMap::new();
        for p in perms {
            *counts.entry(p.mapping().to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        let se = (6000.0_f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for c in counts.values() {
            assert!((*c as f64 - 1000.0).abs() < 3.0 * se, "count {c}");
        }
    }

    #[test]
    fn alpha_schedule() {
        // r = 10^4^(1/3) = 21.54; r^2 / ln r = 464.2 / 3.070 = 151.2
        assert_eq!(default_alpha(10_000, 0.5, 1), 151);
        assert_eq!(default_alpha(1, 0.5, 1), 1);
        assert!(default_alpha(100_000, 0.5, 1) > default_alpha(10_000, 0.5, 1));
    }
}
