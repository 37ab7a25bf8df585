//! Axis-aligned parameter boxes and uniform parameter grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::linspace;

/// Compact box `prod_j [lower_j, upper_j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ThetaBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::param(format!(
                "box bounds need equal nonzero length, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::param(format!("bounds of axis {j} must be finite")));
            }
            if lo > hi {
                return Err(Error::param(format!("empty parameter box on axis {j}: [{lo}, {hi}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn point(theta: &[f64]) -> Result<Self> {
        Self::new(theta.to_vec(), theta.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn is_point(&self) -> bool {
        self.lower == self.upper
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(t, (lo, hi))| *lo <= *t && *t <= *hi)
    }

    pub fn clamp(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(t, (lo, hi))| t.clamp(*lo, *hi))
            .collect()
    }

    /// Domain error unless `theta` lies in the box.
    pub fn check(&self, theta: &[f64]) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "theta {theta:?} outside [{:?}, {:?}]",
                self.lower, self.upper
            )))
        }
    }
}

/// `n` equally spaced points on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    lo: f64,
    hi: f64,
    points: Vec<f64>,
}

impl UniformGrid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::param(format!("invalid grid [{lo}, {hi}] with {n} points")));
        }
        let n = if lo == hi { 1 } else { n };
        Ok(Self {
            lo,
            hi,
            points: linspace(lo, hi, n),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Distance between neighbouring points (0 for a single point).
    pub fn spacing(&self) -> f64 {
        if self.points.len() < 2 {
            0.0
        } else {
            (self.hi - self.lo) / (self.points.len() - 1) as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_validation_and_membership() {
        assert!(ThetaBox::interval(2.0, 1.0).is_err());
        assert!(ThetaBox::new(vec![], vec![]).is_err());
        assert!(ThetaBox::interval(0.0, f64::INFINITY).is_err());
        let b = ThetaBox::new(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        assert!(b.contains(&[0.5, 1.0]));
        assert!(!b.contains(&[0.5, 2.5]));
        assert!(!b.contains(&[0.5]));
        assert_eq!(b.clamp(&[-1.0, 3.0]), vec![0.0, 2.0]);
        assert!(ThetaBox::point(&[3.0]).unwrap().is_point());
        assert!(b.check(&[2.0, 2.0]).is_err());
    }

    #[test]
    fn grid_spacing() {
        let g = UniformGrid::new(1.0, 20.0, 20).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.points()[19], 20.0);
        assert_eq!(UniformGrid::new(3.0, 3.0, 10).unwrap().len(), 1);
    }
}
