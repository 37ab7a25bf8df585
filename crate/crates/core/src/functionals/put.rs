//! Perpetual American put exercised at the first passage below `theta`.

use super::{PathFunctional, Truncation};
use crate::domain::ThetaBox;
use crate::error::{Error, Result};
use crate::path::SteppedPath;

/// `e^{-r tau} (K - x_tau)_+ 1{tau < T}` with `tau = inf{t : x_t < theta}`.
///
/// The infinite horizon is cut at `T = min(horizon, path horizon)`; the
/// neglected tail is at most `K e^{-rT}`.
#[derive(Debug, Clone)]
pub struct PerpetualPut {
    r: f64,
    strike: f64,
    horizon: f64,
    domain: Option<ThetaBox>,
}

impl PerpetualPut {
    pub fn new(r: f64, strike: f64, horizon: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::param(format!("discount rate must be > 0, got {r}")));
        }
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(Error::param(format!("strike must be > 0, got {strike}")));
        }
        if !(horizon > 0.0) {
            return Err(Error::param(format!("horizon must be > 0, got {horizon}")));
        }
        Ok(Self {
            r,
            strike,
            horizon,
            domain: None,
        })
    }

    pub fn with_domain(mut self, domain: ThetaBox) -> Result<Self> {
        if domain.dim() != 1 {
            return Err(Error::param("the put has a single exercise level"));
        }
        self.domain = Some(domain);
        Ok(self)
    }

    /// Upper bound on the payoff mass lost by truncating at `t`.
    pub fn tail_bound(&self, t: f64) -> f64 {
        self.strike * (-self.r * t).exp()
    }
}

impl PathFunctional for PerpetualPut {
    fn dim(&self) -> usize {
        1
    }

    fn domain(&self) -> Option<&ThetaBox> {
        self.domain.as_ref()
    }

    fn evaluate(&self, path: &SteppedPath, theta: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        let horizon = self.horizon.min(path.horizon());
        let Some(k) = path.ruin_index(theta[0]) else {
            return Ok(0.0);
        };
        let tau = path.time(k);
        if tau >= horizon && !(k == 0 && tau == 0.0) {
            return Ok(0.0);
        }
        Ok((-self.r * tau).exp() * (self.strike - path.values()[k]).max(0.0))
    }

    fn truncation(&self, region: &ThetaBox) -> Truncation {
        Truncation {
            horizon: Some(self.horizon),
            absorbing_level: Some(region.lower()[0]),
        }
    }

    fn bound(&self) -> Option<f64> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exercise_cases() {
        let put = PerpetualPut::new(0.1, 10.0, 100.0).unwrap();
        let p = SteppedPath::from_values(1.0, vec![5.0, 3.0, 1.0, 4.0]).unwrap();
        let v = put.evaluate(&p, &[2.0]).unwrap();
        assert!((v - (-0.2_f64).exp() * 9.0).abs() < 1e-15);
        assert_eq!(put.evaluate(&p, &[0.5]).unwrap(), 0.0);
        let ruined = SteppedPath::from_values(1.0, vec![-1.0, 3.0]).unwrap();
        assert_eq!(put.evaluate(&ruined, &[0.0]).unwrap(), 11.0);
        let capped = PerpetualPut::new(0.1, 10.0, 1.5).unwrap();
        assert_eq!(capped.evaluate(&p, &[2.0]).unwrap(), 0.0);
    }
}
