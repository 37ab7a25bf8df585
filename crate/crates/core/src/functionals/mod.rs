//! Parameterized path functionals `h_theta(x)`.
//!
//! Every functional implements [`PathFunctional`]. Smooth ones also provide
//! analytic gradients and Hessians in `theta`; the others return
//! [`Error::Unsupported`].

mod grid;
mod loss;
mod mollifier;
mod put;

pub use grid::{DividendProfiler, GridBuffer, GridProfiler, PointwiseProfiler};
pub use loss::{
    discount_integral, ConstantKernel, DiscountedLoss, DividendParams, IndicatorKernel, LossKernel,
    ThresholdKernel,
};
pub use mollifier::{smoothstep, smoothstep_d1, smoothstep_d2, Mollifier, MollifierJet};
pub use put::PerpetualPut;

use crate::domain::{ThetaBox, UniformGrid};
use crate::error::{Error, Result};
use crate::path::SteppedPath;

/// Which part of a path a functional can see, over a region of `theta`.
///
/// A path may be cut after `horizon` and after the first grid value strictly
/// below `absorbing_level` without changing `h_theta` for any `theta` in the
/// region.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Truncation {
    pub horizon: Option<f64>,
    pub absorbing_level: Option<f64>,
}

impl Truncation {
    /// Steps needed out of `n` available at spacing `h`. One spare step
    /// absorbs rounding in `horizon / h`.
    pub fn steps(&self, h: f64, n: usize) -> usize {
        match self.horizon {
            Some(t) => (((t / h).ceil() as usize).saturating_add(1)).min(n),
            None => n,
        }
    }

    pub fn apply(&self, path: &SteppedPath) -> SteppedPath {
        let mut steps = self.steps(path.h(), path.steps());
        if let Some(level) = self.absorbing_level {
            if let Some(k) = path.values()[..=steps].iter().position(|&v| v < level) {
                steps = k;
            }
        }
        if steps == path.steps() {
            path.clone()
        } else {
            path.truncated(steps)
        }
    }
}

/// `theta -> h_theta(path)`.
pub trait PathFunctional: Send + Sync {
    /// Number of parameters; 0 for functionals that ignore `theta`.
    fn dim(&self) -> usize;

    /// Parameter set on which the functional is defined, if restricted.
    fn domain(&self) -> Option<&ThetaBox> {
        None
    }

    fn evaluate(&self, path: &SteppedPath, theta: &[f64]) -> Result<f64>;

    fn gradient(&self, _path: &SteppedPath, _theta: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Unsupported("this functional has no theta-gradient".into()))
    }

    /// Row-major `d x d` Hessian in `theta`.
    fn hessian(&self, _path: &SteppedPath, _theta: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Unsupported("this functional has no theta-Hessian".into()))
    }

    fn truncation(&self, _region: &ThetaBox) -> Truncation {
        Truncation::default()
    }

    /// `sup |h_theta(x)|` over all paths and `theta`, when known.
    fn bound(&self) -> Option<f64> {
        None
    }

    /// Fast evaluator of `sum_paths h_theta` on a whole parameter grid, for
    /// paths of spacing `h`. `None` when only pointwise evaluation exists.
    fn grid_profiler(&self, _grid: &UniformGrid, _h: f64) -> Option<Box<dyn GridProfiler + '_>> {
        None
    }

    /// Parameter-shape and domain check shared by implementations.
    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        let d = self.dim();
        if d > 0 && theta.len() != d {
            return Err(Error::param(format!("expected {d} parameters, got {}", theta.len())));
        }
        if let Some(domain) = self.domain() {
            domain.check(theta)?;
        }
        Ok(())
    }
}

impl<F: PathFunctional + ?Sized> PathFunctional for Box<F> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn domain(&self) -> Option<&ThetaBox> {
        (**self).domain()
    }
    fn evaluate(&self, path: &SteppedPath, theta: &[f64]) -> Result<f64> {
        (**self).evaluate(path, theta)
    }
    fn gradient(&self, path: &SteppedPath, theta: &[f64]) -> Result<Vec<f64>> {
        (**self).gradient(path, theta)
    }
    fn hessian(&self, path: &SteppedPath, theta: &[f64]) -> Result<Vec<f64>> {
        (**self).hessian(path, theta)
    }
    fn truncation(&self, region: &ThetaBox) -> Truncation {
        (**self).truncation(region)
    }
    fn bound(&self) -> Option<f64> {
        (**self).bound()
    }
    fn grid_profiler(&self, grid: &UniformGrid, h: f64) -> Option<Box<dyn GridProfiler + '_>> {
        (**self).grid_profiler(grid, h)
    }
}

/// `tau = inf{t : x_t < xi} ∧ T`; ignores `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuinTime {
    pub xi: f64,
}

impl PathFunctional for RuinTime {
    fn dim(&self) -> usize {
        0
    }
    fn evaluate(&self, path: &SteppedPath, _theta: &[f64]) -> Result<f64> {
        Ok(path.ruin_time(self.xi))
    }
    fn gradient(&self, _path: &SteppedPath, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; theta.len()])
    }
    fn hessian(&self, _path: &SteppedPath, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; theta.len() * theta.len()])
    }
}

/// `x_T`; ignores `theta`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TerminalValue;

impl PathFunctional for TerminalValue {
    fn dim(&self) -> usize {
        0
    }
    fn evaluate(&self, path: &SteppedPath, _theta: &[f64]) -> Result<f64> {
        Ok(path.terminal())
    }
    fn gradient(&self, _path: &SteppedPath, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; theta.len()])
    }
    fn hessian(&self, _path: &SteppedPath, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; theta.len() * theta.len()])
    }
}

/// `(theta - x_t)^2` at a fixed time `t` (the terminal time when `None`).
/// Its contrast is minimized at the sample mean of `x_t`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QuadraticAtTime {
    pub time: Option<f64>,
}

impl QuadraticAtTime {
    fn x(&self, path: &SteppedPath) -> Result<f64> {
        match self.time {
            Some(t) => path.value_at(t),
            None => Ok(path.terminal()),
        }
    }
}

impl PathFunctional for QuadraticAtTime {
    fn dim(&self) -> usize {
        1
    }
    fn evaluate(&self, path: &SteppedPath, theta: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        let d = theta[0] - self.x(path)?;
        Ok(d * d)
    }
    fn gradient(&self, path: &SteppedPath, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        Ok(vec![2.0 * (theta[0] - self.x(path)?)])
    }
    fn hessian(&self, _path: &SteppedPath, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        Ok(vec![2.0])
    }
    fn truncation(&self, _region: &ThetaBox) -> Truncation {
        Truncation {
            horizon: self.time,
            absorbing_level: None,
        }
    }
}

/// `-h_theta`: turns a maximization target into a contrast.
#[derive(Debug, Clone)]
pub struct Negated<F>(pub F);

impl<F: PathFunctional> PathFunctional for Negated<F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn domain(&self) -> Option<&ThetaBox> {
        self.0.domain()
    }
    fn evaluate(&self, path: &SteppedPath, theta: &[f64]) -> Result<f64> {
        Ok(-self.0.evaluate(path, theta)?)
    }
    fn gradient(&self, path: &SteppedPath, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.0.gradient(path, theta)?.into_iter().map(|g| -g).collect())
    }
    fn hessian(&self, path: &SteppedPath, theta: &[f64]) -> Result<Vec<f64>> {
        Ok(self.0.hessian(path, theta)?.into_iter().map(|g| -g).collect())
    }
    fn truncation(&self, region: &ThetaBox) -> Truncation {
        self.0.truncation(region)
    }
    fn bound(&self) -> Option<f64> {
        self.0.bound()
    }
    fn grid_profiler(&self, grid: &UniformGrid, h: f64) -> Option<Box<dyn GridProfiler + '_>> {
        self.0
            .grid_profiler(grid, h)
            .map(|p| Box::new(grid::NegatedProfiler(p)) as Box<dyn GridProfiler + '_>)
    }
}

/// `h_theta + offset`.
#[derive(Debug, Clone)]
pub struct Shifted<F> {
    pub inner: F,
    pub offset: f64,
}

impl<F: PathFunctional> PathFunctional for Shifted<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn domain(&self) -> Option<&ThetaBox> {
        self.inner.domain()
    }
    fn evaluate(&self, path: &SteppedPath, theta: &[f64]) -> Result<f64> {
        Ok(self.inner.evaluate(path, theta)? + self.offset)
    }
    fn gradient(&self, path: &SteppedPath, theta: &[f64]) -> Result<Vec<f64>> {
        self.inner.gradient(path, theta)
    }
    fn hessian(&self, path: &SteppedPath, theta: &[f64]) -> Result<Vec<f64>> {
        self.inner.hessian(path, theta)
    }
    fn truncation(&self, region: &ThetaBox) -> Truncation {
        self.inner.truncation(region)
    }
    fn bound(&self) -> Option<f64> {
        self.inner.bound().map(|b| b + self.offset.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SteppedPath {
        SteppedPath::from_increments(0.0, 1.0, &[1.0, -2.0, 3.0]).unwrap()
    }

    #[test]
    fn simple_functionals() {
        let p = sample();
        assert_eq!(RuinTime { xi: 0.0 }.evaluate(&p, &[]).unwrap(), 2.0);
        assert_eq!(TerminalValue.evaluate(&p, &[7.0]).unwrap(), 2.0);
        let q = QuadraticAtTime { time: Some(1.0) };
        assert_eq!(q.evaluate(&p, &[3.0]).unwrap(), 4.0);
        assert_eq!(q.gradient(&p, &[3.0]).unwrap(), vec![4.0]);
        assert!(q.evaluate(&p, &[1.0, 2.0]).is_err());
        assert_eq!(Negated(q).evaluate(&p, &[3.0]).unwrap(), -4.0);
        let s = Shifted { inner: q, offset: 1.5 };
        assert_eq!(s.evaluate(&p, &[3.0]).unwrap(), 5.5);
    }

    #[test]
    fn truncation_cuts_at_horizon_and_level() {
        let p = SteppedPath::from_values(1.0, vec![5.0, 4.0, 0.5, 3.0, 6.0]).unwrap();
        let t = Truncation {
            horizon: Some(1.0),
            absorbing_level: None,
        };
        assert_eq!(t.apply(&p).values(), &[5.0, 4.0, 0.5]);
        let t = Truncation {
            horizon: None,
            absorbing_level: Some(1.0),
        };
        assert_eq!(t.apply(&p).values(), &[5.0, 4.0, 0.5]);
        assert_eq!(Truncation::default().apply(&p), p);
    }
}
