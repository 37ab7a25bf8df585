//! Plug-in sandwich covariance `V^{-1} J V^{-1}`.

use nalgebra::DMatrix;

use super::optimize::ContrastProblem;
use crate::domain::ThetaBox;
use crate::error::{Error, Result};
use crate::stats::pairwise_sum;

/// Condition number above which the plug-in Hessian counts as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// `V = P grad^2 h`, `J = P grad h grad h^T`, returned row-major.
pub fn plug_in_moments(problem: &ContrastProblem<'_>, theta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = theta.len();
    let point = ThetaBox::point(theta)?;
    let contrast = super::sample::Contrast::new(problem.functional, problem.sample, problem.functional.truncation(&point))?;
    let f = problem.functional;
    let per_path = contrast.map(|p| {
        let g = f.gradient(p, theta)?;
        let h = f.hessian(p, theta)?;
        let mut out = h;
        for a in 0..d {
            for b in 0..d {
                out.push(g[a] * g[b]);
            }
        }
        Ok(out)
    })?;
    let n = per_path.len() as f64;
    let column = |c: usize| pairwise_sum(&per_path.iter().map(|v| v[c]).collect::<Vec<_>>()) / n;
    let v = (0..d * d).map(column).collect();
    let j = (d * d..2 * d * d).map(column).collect();
    Ok((v, j))
}

/// Sandwich covariance at `theta` under the sample's empirical measure,
/// symmetrized. Fails with [`Error::DegenerateHessian`] when `V` is
/// singular or its condition number exceeds [`MAX_CONDITION`].
pub fn sandwich_covariance(problem: &ContrastProblem<'_>, theta: &[f64]) -> Result<Vec<f64>> {
    let d = theta.len();
    let (v, j) = plug_in_moments(problem, theta)?;
    if v.iter().chain(&j).any(|x| !x.is_finite()) {
        return Err(Error::Numeric {
            theta: theta.to_vec(),
            message: "non-finite plug-in moments".into(),
        });
    }
    let vm = DMatrix::from_row_slice(d, d, &v);
    let jm = DMatrix::from_row_slice(d, d, &j);
    let sv = vm.clone().svd(false, false).singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::DegenerateHessian { hessian: v, condition });
    }
    let vinv = vm.try_inverse().ok_or(Error::DegenerateHessian {
        hessian: v.clone(),
        condition,
    })?;
    let s = &vinv * jm * &vinv;
    let sym = (&s + s.transpose()) * 0.5;
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            out.push(sym[(a, b)]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{QuadraticAtTime, RuinTime};
    use crate::quasi::QuasiEnsemble;

    #[test]
    fn quadratic_sandwich_is_population_variance() {
        // x_1 over all orderings of [1, -2, 3]: {1, 1, -2, -2, 3, 3}; mean 2/3,
        // V = 2, J = 4 * E(theta - x)^2, so Sigma = E(theta - x)^2 = 38/9.
        let e = QuasiEnsemble::exhaustive(vec![1.0, -2.0, 3.0], 0.0, 1.0).unwrap();
        let f = QuadraticAtTime { time: Some(1.0) };
        let p = ContrastProblem::new(&e, &f, ThetaBox::interval(-10.0, 10.0).unwrap()).unwrap();
        let s = sandwich_covariance(&p, &[2.0 / 3.0]).unwrap();
        assert!((s[0] - 38.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_gives_zero_sigma() {
        let e = QuasiEnsemble::exhaustive(vec![2.0, 2.0], 0.0, 1.0).unwrap();
        let f = QuadraticAtTime { time: Some(1.0) };
        let p = ContrastProblem::new(&e, &f, ThetaBox::interval(0.0, 5.0).unwrap()).unwrap();
        assert_eq!(sandwich_covariance(&p, &[2.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn singular_hessian_is_reported() {
        let e = QuasiEnsemble::exhaustive(vec![2.0, -1.0], 0.0, 1.0).unwrap();
        let f = RuinTime { xi: 0.0 };
        let p = ContrastProblem::new(&e, &f, ThetaBox::interval(0.0, 5.0).unwrap()).unwrap();
        assert!(matches!(
            sandwich_covariance(&p, &[1.0]),
            Err(Error::DegenerateHessian { .. })
        ));
    }
}
