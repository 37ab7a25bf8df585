//! Right-continuous step paths on a uniform grid.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step function `x(t) = values[k]` for `t` in `[k*h, (k+1)*h)`.
///
/// `values[0] = u` is the start value and `values[k] = u + (d_1 + ... + d_k)`.
/// The jump at `t_k` is already applied at `t_k`, matching the indicator
/// `1_{[t_k, inf)}(t)`. When increments lie on the simulation lattice (see
/// [`crate::levy_model::LATTICE_BITS`]) the partial sums are exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteppedPath {
    h: f64,
    values: Vec<f64>,
}

impl SteppedPath {
    pub fn from_increments(u: f64, h: f64, increments: &[f64]) -> Result<Self> {
        Self::from_increment_iter(u, h, increments.iter().copied())
    }

    pub fn from_increment_iter(u: f64, h: f64, increments: impl IntoIterator<Item = f64>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param(format!("grid spacing must be > 0, got {h}")));
        }
        let increments = increments.into_iter();
        let mut values = Vec::with_capacity(increments.size_hint().0 + 1);
        // u is added to the exact partial sum, so the value at a step does
        // not depend on the order of the increments before it
        let mut sum = 0.0;
        values.push(u);
        for d in increments {
            sum += d;
            values.push(u + sum);
        }
        Ok(Self { h, values })
    }

    /// Builds a path directly from its grid values.
    pub fn from_values(h: f64, values: Vec<f64>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param(format!("grid spacing must be > 0, got {h}")));
        }
        if values.is_empty() {
            return Err(Error::param("a path needs at least its start value"));
        }
        Ok(Self { h, values })
    }

    pub fn start(&self) -> f64 {
        self.values[0]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of increments (grid steps).
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.h
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().expect("non-empty")
    }

    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    /// Index `k` of the step containing `t`, i.e. the largest `k` with
    /// `k*h <= t`, compared against the grid times exactly as they are
    /// computed elsewhere (`k as f64 * h`).
    pub fn step_index(&self, t: f64) -> Result<usize> {
        let horizon = self.horizon();
        if !(t >= 0.0 && t <= horizon) {
            return Err(Error::domain(format!("time {t} outside [0, {horizon}]")));
        }
        let n = self.steps();
        let mut k = ((t / self.h).floor() as usize).min(n);
        while k < n && self.time(k + 1) <= t {
            k += 1;
        }
        while k > 0 && self.time(k) > t {
            k -= 1;
        }
        Ok(k)
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.step_index(t)?])
    }

    /// First grid index with `values[k] < xi`, if any.
    pub fn ruin_index(&self, xi: f64) -> Option<usize> {
        self.values.iter().position(|&v| v < xi)
    }

    /// `inf{t : x_t < xi} ∧ T`. For a step path the passage happens at a grid
    /// time; ties (`x_t == xi`) do not count as ruin.
    pub fn ruin_time(&self, xi: f64) -> f64 {
        match self.ruin_index(xi) {
            Some(k) => self.time(k),
            None => self.horizon(),
        }
    }

    /// The first `steps` increments as a path of their own.
    pub fn truncated(&self, steps: usize) -> SteppedPath {
        let end = steps.min(self.steps());
        SteppedPath {
            h: self.h,
            values: self.values[..=end].to_vec(),
        }
    }

    pub fn write_csv(&self, path: &Path, max_time: Option<f64>) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "t,value").map_err(io)?;
        for (k, v) in self.values.iter().enumerate() {
            let t = self.time(k);
            if max_time.is_some_and(|m| t > m) {
                break;
            }
            writeln!(w, "{t},{v}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// `max_k |a_k - b_k|`, the uniform distance between two paths on the same
/// grid. It bounds the Skorokhod distance from above (identity time change).
pub fn sup_distance(a: &SteppedPath, b: &SteppedPath) -> Result<f64> {
    if a.steps() != b.steps() || a.h != b.h {
        return Err(Error::param(format!(
            "grid mismatch: ({} steps, h={}) vs ({} steps, h={})",
            a.steps(),
            a.h,
            b.steps(),
            b.h
        )));
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SteppedPath {
        SteppedPath::from_increments(0.0, 1.0, &[1.0, -2.0, 3.0]).unwrap()
    }

    #[test]
    fn cumulative_construction() {
        assert_eq!(sample().values(), &[0.0, 1.0, -1.0, 2.0]);
        let empty = SteppedPath::from_increments(5.0, 0.5, &[]).unwrap();
        assert_eq!(empty.values(), &[5.0]);
        assert_eq!(empty.horizon(), 0.0);
        assert!(SteppedPath::from_increments(0.0, 0.0, &[1.0]).is_err());
    }

    #[test]
    fn evaluation_is_right_continuous() {
        let p = sample();
        assert_eq!(p.value_at(1.5).unwrap(), 1.0);
        assert_eq!(p.value_at(2.0).unwrap(), -1.0);
        assert_eq!(p.value_at(0.0).unwrap(), 0.0);
        assert_eq!(p.value_at(3.0).unwrap(), 2.0);
        assert!(p.value_at(3.0001).is_err());
        assert!(p.value_at(-0.1).is_err());
    }

    #[test]
    fn grid_times_with_inexact_spacing() {
        let p = SteppedPath::from_increments(0.0, 0.1, &[1.0; 10]).unwrap();
        for k in 0..=10 {
            assert_eq!(p.value_at(k as f64 * 0.1).unwrap(), k as f64);
        }
        // 0.3 / 0.1 rounds below 3 in floating point
        assert_eq!(p.value_at(0.3).unwrap(), p.values()[p.step_index(0.3).unwrap()]);
    }

    #[test]
    fn ruin_time_cases() {
        assert_eq!(sample().ruin_time(0.0), 2.0);
        let safe = SteppedPath::from_values(1.0, vec![5.0, 6.0, 7.0]).unwrap();
        assert_eq!(safe.ruin_time(0.0), 2.0);
        let start_ruined = SteppedPath::from_values(1.0, vec![-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(start_ruined.ruin_time(0.0), 0.0);
        let tie = SteppedPath::from_values(1.0, vec![1.0, 0.0, 1.0]).unwrap();
        assert_eq!(tie.ruin_time(0.0), 2.0);
    }

    #[test]
    fn sup_distance_cases() {
        let a = SteppedPath::from_values(1.0, vec![0.0, 1.0, 2.0]).unwrap();
        let b = SteppedPath::from_values(1.0, vec![0.0, 1.0, 5.0]).unwrap();
        assert_eq!(sup_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(sup_distance(&a, &b).unwrap(), 3.0);
        let shifted = SteppedPath::from_values(1.0, a.values().iter().map(|v| v - 2.5).collect()).unwrap();
        assert_eq!(sup_distance(&a, &shifted).unwrap(), 2.5);
        let other_grid = SteppedPath::from_values(0.5, vec![0.0, 1.0, 2.0]).unwrap();
        assert!(sup_distance(&a, &other_grid).is_err());
    }

    #[test]
    fn csv_export() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("p.csv");
        sample().write_csv(&f, Some(2.0)).unwrap();
        let text = std::fs::read_to_string(&f).unwrap();
        assert_eq!(text, "t,value\n0,0\n1,1\n2,-1\n");
    }
}
