//! Discounted loss up to default: `h_theta(x) = int_0^{tau^x} e^{-rt} U_theta(t, x_t) dt`.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use super::grid::{DividendProfiler, GridProfiler};
use super::mollifier::Mollifier;
use super::{PathFunctional, Truncation};
use crate::domain::{ThetaBox, UniformGrid};
use crate::error::{Error, Result};
use crate::path::SteppedPath;

/// 8-point Gauss–Legendre nodes on [-1, 1] (positive half) and weights.
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `int_a^b e^{-rt} dt`.
#[inline]
pub fn discount_integral(r: f64, a: f64, b: f64) -> f64 {
    (-r * a).exp() * -(-r * (b - a)).exp_m1() / r
}

/// Payoff rate `U_theta(t, x)`.
///
/// The time dependence is confined to a window `[t1, t2)`: before `t1` the
/// kernel (and its `theta`-derivatives) equal their value at any earlier
/// time, and from `t2` on they vanish.
pub trait LossKernel: Send + Sync + Debug {
    fn dim(&self) -> usize;

    /// `sup |U|`.
    fn bound(&self) -> f64;

    fn differentiable(&self) -> bool {
        false
    }

    fn window(&self, theta: &[f64]) -> (f64, f64);

    /// Latest `t2` over a parameter region, if finite.
    fn horizon_over(&self, region: &ThetaBox) -> Option<f64>;

    fn value(&self, t: f64, x: f64, theta: &[f64]) -> f64;

    fn gradient(&self, _t: f64, _x: f64, _theta: &[f64], _out: &mut [f64]) {}

    fn hessian(&self, _t: f64, _x: f64, _theta: &[f64], _out: &mut [f64]) {}

    fn as_threshold(&self) -> Option<&ThresholdKernel> {
        None
    }
}

/// `U = value`, independent of everything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantKernel {
    pub value: f64,
}

impl LossKernel for ConstantKernel {
    fn dim(&self) -> usize {
        0
    }
    fn bound(&self) -> f64 {
        self.value.abs()
    }
    fn differentiable(&self) -> bool {
        true
    }
    fn window(&self, _theta: &[f64]) -> (f64, f64) {
        (f64::INFINITY, f64::INFINITY)
    }
    fn horizon_over(&self, _region: &ThetaBox) -> Option<f64> {
        None
    }
    fn value(&self, _t: f64, _x: f64, _theta: &[f64]) -> f64 {
        self.value
    }
    fn gradient(&self, _t: f64, _x: f64, _theta: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn hessian(&self, _t: f64, _x: f64, _theta: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Mollified dividend rate `alpha * phi(x, theta_l) * phi(theta_m, t / c)`:
/// dividends are paid while the surplus exceeds the level `theta_l` and until
/// the maturity `c * theta_m`.
///
/// With `split = false` both roles share one parameter (`d = 1`); with
/// `split = true` the parameter is `(theta_l, theta_m)` (`d = 2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdKernel {
    pub(crate) alpha: f64,
    pub(crate) mollifier: Mollifier,
    pub(crate) maturity_scale: f64,
    pub(crate) split: bool,
}

impl ThresholdKernel {
    pub fn new(alpha: f64, epsilon: f64, maturity_scale: f64, split: bool) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param(format!("dividend rate must be > 0, got {alpha}")));
        }
        if !(maturity_scale > 0.0 && maturity_scale.is_finite()) {
            return Err(Error::param(format!("maturity scale must be > 0, got {maturity_scale}")));
        }
        Ok(Self {
            alpha,
            mollifier: Mollifier::new(epsilon)?,
            maturity_scale,
            split,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.mollifier.epsilon()
    }

    pub fn maturity_scale(&self) -> f64 {
        self.maturity_scale
    }

    pub fn is_split(&self) -> bool {
        self.split
    }

    #[inline]
    fn roles(&self, theta: &[f64]) -> (f64, f64) {
        if self.split {
            (theta[0], theta[1])
        } else {
            (theta[0], theta[0])
        }
    }

    /// Level factor `phi(x, theta_l)` and its first two `theta_l`-derivatives.
    #[inline]
    fn level(&self, x: f64, level: f64) -> (f64, f64, f64) {
        let m = &self.mollifier;
        (m.value(x, level), -m.du(x, level), m.duu(x, level))
    }

    /// Maturity factor `phi(theta_m, t/c)` and its `theta_m`-derivatives.
    #[inline]
    fn maturity(&self, t: f64, maturity: f64) -> (f64, f64, f64) {
        let m = &self.mollifier;
        let s = t / self.maturity_scale;
        (m.value(maturity, s), m.du(maturity, s), m.duu(maturity, s))
    }
}

impl LossKernel for ThresholdKernel {
    fn dim(&self) -> usize {
        if self.split {
            2
        } else {
            1
        }
    }
    fn bound(&self) -> f64 {
        self.alpha
    }
    fn differentiable(&self) -> bool {
        true
    }
    fn window(&self, theta: &[f64]) -> (f64, f64) {
        let (_, m) = self.roles(theta);
        let eps = self.mollifier.epsilon();
        (self.maturity_scale * (m - eps), self.maturity_scale * (m + eps))
    }
    fn horizon_over(&self, region: &ThetaBox) -> Option<f64> {
        let m = *region.upper().last().expect("non-empty box");
        Some(self.maturity_scale * (m + self.mollifier.epsilon()))
    }
    fn value(&self, t: f64, x: f64, theta: &[f64]) -> f64 {
        let (l, m) = self.roles(theta);
        self.alpha * self.mollifier.value(x, l) * self.mollifier.value(m, t / self.maturity_scale)
    }
    fn gradient(&self, t: f64, x: f64, theta: &[f64], out: &mut [f64]) {
        let (l, m) = self.roles(theta);
        let (a, a1, _) = self.level(x, l);
        let (b, b1, _) = self.maturity(t, m);
        if self.split {
            out[0] = self.alpha * a1 * b;
            out[1] = self.alpha * a * b1;
        } else {
            out[0] = self.alpha * (a1 * b + a * b1);
        }
    }
    fn hessian(&self, t: f64, x: f64, theta: &[f64], out: &mut [f64]) {
        let (l, m) = self.roles(theta);
        let (a, a1, a2) = self.level(x, l);
        let (b, b1, b2) = self.maturity(t, m);
        if self.split {
            let cross = self.alpha * a1 * b1;
            out[0] = self.alpha * a2 * b;
            out[1] = cross;
            out[2] = cross;
            out[3] = self.alpha * a * b2;
        } else {
            out[0] = self.alpha * (a2 * b + 2.0 * a1 * b1 + a * b2);
        }
    }
    fn as_threshold(&self) -> Option<&ThresholdKernel> {
        Some(self)
    }
}

/// Raw dividend rate `alpha * 1{x >= theta} * 1{t <= c theta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorKernel {
    pub alpha: f64,
    pub maturity_scale: f64,
}

impl LossKernel for IndicatorKernel {
    fn dim(&self) -> usize {
        1
    }
    fn bound(&self) -> f64 {
        self.alpha.abs()
    }
    fn window(&self, theta: &[f64]) -> (f64, f64) {
        let t = self.maturity_scale * theta[0];
        (t, t)
    }
    fn horizon_over(&self, region: &ThetaBox) -> Option<f64> {
        Some(self.maturity_scale * region.upper()[0])
    }
    fn value(&self, t: f64, x: f64, theta: &[f64]) -> f64 {
        if x >= theta[0] && t <= self.maturity_scale * theta[0] {
            self.alpha
        } else {
            0.0
        }
    }
}

/// Parameters of the dividend example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DividendParams {
    /// Dividend rate.
    pub alpha: f64,
    /// Mollifier half-width.
    pub epsilon: f64,
    /// `c` in the maturity map `g(theta) = c * theta`.
    pub maturity_scale: f64,
    /// Discount rate.
    pub r: f64,
    /// Default level; also the lower end of the parameter interval.
    pub xi: f64,
    /// Upper end of the parameter interval.
    pub theta_max: f64,
}

impl Default for DividendParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            epsilon: 0.1,
            maturity_scale: 1.0,
            r: 0.5,
            xi: 1.0,
            theta_max: 20.0,
        }
    }
}

impl DividendParams {
    pub fn domain(&self) -> Result<ThetaBox> {
        ThetaBox::interval(self.xi, self.theta_max)
    }
}

/// `int_0^{tau} e^{-rt} U_theta(t, x_t) dt` on a step path, where
/// `tau = inf{t : x_t < xi} ∧ T`.
///
/// Segments on which `U` does not depend on time are integrated in closed
/// form; segments inside the kernel's time window use 8-point
/// Gauss–Legendre.
#[derive(Debug, Clone)]
pub struct DiscountedLoss<K> {
    kernel: K,
    r: f64,
    xi: f64,
    domain: Option<ThetaBox>,
}

impl<K: LossKernel> DiscountedLoss<K> {
    pub fn new(kernel: K, r: f64, xi: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::param(format!("discount rate must be > 0, got {r}")));
        }
        if !xi.is_finite() {
            return Err(Error::param("default level must be finite"));
        }
        Ok(Self {
            kernel,
            r,
            xi,
            domain: None,
        })
    }

    pub fn with_domain(mut self, domain: ThetaBox) -> Result<Self> {
        if self.kernel.dim() > 0 && domain.dim() != self.kernel.dim() {
            return Err(Error::param(format!(
                "domain of dimension {} for a {}-parameter kernel",
                domain.dim(),
                self.kernel.dim()
            )));
        }
        self.domain = Some(domain);
        Ok(self)
    }

    pub fn kernel(&self) -> &K {
        &self.kernel
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Runs the piecewise integration of `e^{-rt} q(t, x_t)` where `q`
    /// writes `m` components into its buffer.
    fn integrate(&self, path: &SteppedPath, theta: &[f64], m: usize, q: impl Fn(f64, f64, &mut [f64])) -> Vec<f64> {
        let (t1, t2) = self.kernel.window(theta);
        let mut acc = vec![0.0; m];
        let mut buf = vec![0.0; m];
        let values = path.values();
        for k in 0..path.steps() {
            let x = values[k];
            if x < self.xi {
                break;
            }
            let a = path.time(k);
            if a >= t2 {
                break;
            }
            let b = path.time(k + 1);
            if a < t1 {
                let w = discount_integral(self.r, a, b.min(t1));
                q(a, x, &mut buf);
                for (s, v) in acc.iter_mut().zip(&buf) {
                    *s += w * v;
                }
            }
            let (lo, hi) = (a.max(t1), b.min(t2));
            if lo < hi {
                let mid = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo);
                for (node, weight) in GL_NODES.iter().zip(&GL_WEIGHTS) {
                    for t in [mid - half * node, mid + half * node] {
                        let w = half * weight * (-self.r * t).exp();
                        q(t, x, &mut buf);
                        for (s, v) in acc.iter_mut().zip(&buf) {
                            *s += w * v;
                        }
                    }
                }
            }
        }
        acc
    }
}

/// One segment's weight with the level factor set to 1:
/// `alpha * int_a^b e^{-rt} phi(theta, t/c) dt`, computed exactly as
/// `DiscountedLoss::evaluate` splits and integrates the segment.
pub(crate) fn segment_weight(kernel: &ThresholdKernel, r: f64, a: f64, b: f64, theta: f64) -> f64 {
    let (t1, t2) = kernel.window(&[theta]);
    let mut acc = 0.0;
    if a >= t2 {
        return acc;
    }
    if a < t1 {
        acc += discount_integral(r, a, b.min(t1)) * kernel.alpha;
    }
    let (lo, hi) = (a.max(t1), b.min(t2));
    if lo < hi {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for (node, weight) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            for t in [mid - half * node, mid + half * node] {
                let w = half * weight * (-r * t).exp();
                acc += w * kernel.alpha * kernel.mollifier.value(theta, t / kernel.maturity_scale);
            }
        }
    }
    acc
}

impl DiscountedLoss<ThresholdKernel> {
    /// The mollified dividend functional on `Theta = [xi, theta_max]`.
    pub fn mollified_dividend(p: &DividendParams) -> Result<Self> {
        let kernel = ThresholdKernel::new(p.alpha, p.epsilon, p.maturity_scale, false)?;
        Self::new(kernel, p.r, p.xi)?.with_domain(p.domain()?)
    }

    /// Level and maturity as separate parameters on `[xi, theta_max]^2`.
    pub fn two_threshold_dividend(p: &DividendParams) -> Result<Self> {
        let kernel = ThresholdKernel::new(p.alpha, p.epsilon, p.maturity_scale, true)?;
        let d = ThetaBox::new(vec![p.xi; 2], vec![p.theta_max; 2])?;
        Self::new(kernel, p.r, p.xi)?.with_domain(d)
    }
}

impl DiscountedLoss<IndicatorKernel> {
    pub fn indicator_dividend(p: &DividendParams) -> Result<Self> {
        if !(p.alpha > 0.0 && p.maturity_scale > 0.0) {
            return Err(Error::param("dividend rate and maturity scale must be > 0"));
        }
        let kernel = IndicatorKernel {
            alpha: p.alpha,
            maturity_scale: p.maturity_scale,
        };
        Self::new(kernel, p.r, p.xi)?.with_domain(p.domain()?)
    }
}

impl<K: LossKernel> PathFunctional for DiscountedLoss<K> {
    fn dim(&self) -> usize {
        self.kernel.dim()
    }

    fn domain(&self) -> Option<&ThetaBox> {
        self.domain.as_ref()
    }

    fn evaluate(&self, path: &SteppedPath, theta: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        let v = self.integrate(path, theta, 1, |t, x, out| out[0] = self.kernel.value(t, x, theta))[0];
        debug_assert!(
            v.abs() <= self.kernel.bound() / self.r * (1.0 + 1e-12) + 1e-300,
            "discounted loss {v} exceeds sup|U|/r"
        );
        Ok(v)
    }

    fn gradient(&self, path: &SteppedPath, theta: &[f64]) -> Result<Vec<f64>> {
        if !self.kernel.differentiable() {
            return Err(Error::Unsupported("gradient of a non-differentiable kernel".into()));
        }
        self.check_theta(theta)?;
        let d = theta.len();
        Ok(self.integrate(path, theta, d, |t, x, out| self.kernel.gradient(t, x, theta, out)))
    }

    fn hessian(&self, path: &SteppedPath, theta: &[f64]) -> Result<Vec<f64>> {
        if !self.kernel.differentiable() {
            return Err(Error::Unsupported("Hessian of a non-differentiable kernel".into()));
        }
        self.check_theta(theta)?;
        let d = theta.len();
        Ok(self.integrate(path, theta, d * d, |t, x, out| self.kernel.hessian(t, x, theta, out)))
    }

    fn truncation(&self, region: &ThetaBox) -> Truncation {
        Truncation {
            horizon: self.kernel.horizon_over(region),
            absorbing_level: Some(self.xi),
        }
    }

    fn bound(&self) -> Option<f64> {
        Some(self.kernel.bound() / self.r)
    }

    fn grid_profiler(&self, grid: &UniformGrid, h: f64) -> Option<Box<dyn GridProfiler + '_>> {
        let k = self.kernel.as_threshold()?;
        if k.split {
            return None;
        }
        DividendProfiler::new(*k, self.r, self.xi, grid, h)
            .ok()
            .map(|p| Box::new(p) as Box<dyn GridProfiler + '_>)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> DividendParams {
        DividendParams {
            alpha: 2.0,
            epsilon: 0.25,
            maturity_scale: 1.5,
            r: 0.4,
            xi: 0.0,
            theta_max: 10.0,
        }
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        let s: f64 = GL_WEIGHTS.iter().sum();
        assert!((2.0 * s - 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_kernel_closed_form() {
        let f = DiscountedLoss::new(ConstantKernel { value: 1.0 }, 0.5, -100.0).unwrap();
        let p = SteppedPath::from_increments(0.0, 0.25, &[0.1; 40]).unwrap();
        let expect = (1.0 - (-0.5_f64 * 10.0).exp()) / 0.5;
        assert!((f.evaluate(&p, &[]).unwrap() - expect).abs() < 1e-14);
        assert_eq!(f.gradient(&p, &[1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn ruined_at_start_is_zero() {
        let f = DiscountedLoss::mollified_dividend(&params()).unwrap();
        let p = SteppedPath::from_values(1.0, vec![-1.0, 5.0, 5.0]).unwrap();
        assert_eq!(f.evaluate(&p, &[2.0]).unwrap(), 0.0);
    }

    #[test]
    fn domain_and_support_errors() {
        let f = DiscountedLoss::mollified_dividend(&params()).unwrap();
        let p = SteppedPath::from_values(1.0, vec![5.0, 5.0]).unwrap();
        assert!(matches!(f.evaluate(&p, &[11.0]), Err(Error::Domain(_))));
        let g = DiscountedLoss::indicator_dividend(&params()).unwrap();
        assert!(matches!(g.gradient(&p, &[2.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn flat_dividend_matches_hand_computation() {
        // Path stays at 5 above theta + eps, horizon below c(theta - eps).
        let f = DiscountedLoss::mollified_dividend(&params()).unwrap();
        let p = SteppedPath::from_values(1.0, vec![5.0, 5.0, 5.0]).unwrap();
        let expect = 2.0 * (1.0 - (-0.8_f64).exp()) / 0.4;
        assert!((f.evaluate(&p, &[3.0]).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn two_threshold_hessian_is_symmetric() {
        let f = DiscountedLoss::two_threshold_dividend(&params()).unwrap();
        let p = SteppedPath::from_increments(3.0, 0.1, &[0.01, -0.02, 0.015, 0.03, -0.01, 0.0, 0.02, 0.01]).unwrap();
        let h = f.hessian(&p, &[3.05, 0.5]).unwrap();
        assert_eq!(h[1], h[2]);
        assert!(h.iter().any(|v| *v != 0.0));
    }
}
