//! C² surrogate for the step indicator `1{u >= z}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `phi(u, z) = S(s)` with `s = clamp((u - z + eps) / (2 eps), 0, 1)` and the
/// quintic smoothstep `S(s) = 6s^5 - 15s^4 + 10s^3`.
///
/// `phi` is exactly 1 for `u >= z + eps`, exactly 0 for `u <= z - eps`, and
/// `S'`, `S''` vanish at both ends, so `phi` is twice continuously
/// differentiable in `(u, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    epsilon: f64,
}

/// Value and partial derivatives of the mollifier at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifierJet {
    pub value: f64,
    pub du: f64,
    pub dz: f64,
    pub duu: f64,
    pub duz: f64,
    pub dzz: f64,
}

impl Mollifier {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::param(format!("mollifier width must be > 0, got {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The clamped smoothstep coordinate.
    #[inline]
    pub fn coordinate(&self, u: f64, z: f64) -> f64 {
        // The explicit comparisons keep the plateaus exact despite rounding
        // in the affine map.
        if u >= z + self.epsilon {
            1.0
        } else if u <= z - self.epsilon {
            0.0
        } else {
            ((u - z + self.epsilon) / (2.0 * self.epsilon)).clamp(0.0, 1.0)
        }
    }

    #[inline]
    pub fn value(&self, u: f64, z: f64) -> f64 {
        smoothstep(self.coordinate(u, z))
    }

    /// `d phi / du`; `d phi / dz` is its negative.
    #[inline]
    pub fn du(&self, u: f64, z: f64) -> f64 {
        smoothstep_d1(self.coordinate(u, z)) / (2.0 * self.epsilon)
    }

    /// `d^2 phi / du^2`; equals `d^2 phi / dz^2` and `-d^2 phi / du dz`.
    #[inline]
    pub fn duu(&self, u: f64, z: f64) -> f64 {
        smoothstep_d2(self.coordinate(u, z)) / (4.0 * self.epsilon * self.epsilon)
    }

    pub fn jet(&self, u: f64, z: f64) -> MollifierJet {
        let d1 = self.du(u, z);
        let d2 = self.duu(u, z);
        MollifierJet {
            value: self.value(u, z),
            du: d1,
            dz: -d1,
            duu: d2,
            duz: -d2,
            dzz: d2,
        }
    }
}

#[inline]
pub fn smoothstep(s: f64) -> f64 {
    s * s * s * (s * (6.0 * s - 15.0) + 10.0)
}

#[inline]
pub fn smoothstep_d1(s: f64) -> f64 {
    30.0 * s * s * (1.0 - s) * (1.0 - s)
}

#[inline]
pub fn smoothstep_d2(s: f64) -> f64 {
    60.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values() {
        let m = Mollifier::new(0.1).unwrap();
        assert_eq!(m.value(1.1, 1.0), 1.0);
        assert_eq!(m.value(0.9, 1.0), 0.0);
        assert_eq!(m.value(1.0, 1.0), 0.5);
        assert_eq!(m.value(5.0, 1.0), 1.0);
        assert_eq!(m.value(-5.0, 1.0), 0.0);
        assert!(Mollifier::new(0.0).is_err());
    }

    #[test]
    fn derivatives_vanish_outside_band() {
        let m = Mollifier::new(0.2).unwrap();
        for u in [-1.0, 0.8, 1.2, 3.0] {
            assert_eq!(m.du(u, 1.0), 0.0);
            assert_eq!(m.duu(u, 1.0), 0.0);
        }
    }

    #[test]
    fn partials_match_central_differences() {
        let m = Mollifier::new(0.3).unwrap();
        let z = 0.7;
        for i in 1..20 {
            let u = z - 0.3 + 0.6 * i as f64 / 20.0;
            let d = 1e-6;
            let fd = (m.value(u + d, z) - m.value(u - d, z)) / (2.0 * d);
            assert!((fd - m.du(u, z)).abs() <= 1e-6 * m.du(u, z).abs().max(1e-3));
            let fdz = (m.value(u, z + d) - m.value(u, z - d)) / (2.0 * d);
            assert!((fdz - m.jet(u, z).dz).abs() <= 1e-6 * fdz.abs().max(1e-3));
            let fd2 = (m.du(u + d, z) - m.du(u - d, z)) / (2.0 * d);
            assert!((fd2 - m.duu(u, z)).abs() <= 1e-5 * m.duu(u, z).abs().max(1e-2));
        }
    }
}
