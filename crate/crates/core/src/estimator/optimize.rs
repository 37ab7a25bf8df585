//! Grid scan followed by local refinement.

use serde::{Deserialize, Serialize};

use super::sample::{Contrast, PathSample};
use crate::domain::{ThetaBox, UniformGrid};
use crate::error::{Error, Result};
use crate::functionals::PathFunctional;

/// Minimize `theta -> P h_theta` over a box, where `P` is the uniform
/// measure on a path sample.
pub struct ContrastProblem<'a> {
    pub sample: &'a dyn PathSample,
    pub functional: &'a dyn PathFunctional,
    pub domain: ThetaBox,
}

impl<'a> ContrastProblem<'a> {
    pub fn new(sample: &'a dyn PathSample, functional: &'a dyn PathFunctional, domain: ThetaBox) -> Result<Self> {
        let d = functional.dim();
        if d > 0 && domain.dim() != d {
            return Err(Error::param(format!(
                "{}-dimensional domain for a {d}-parameter functional",
                domain.dim()
            )));
        }
        if sample.is_empty() {
            return Err(Error::param("empty path sample"));
        }
        Ok(Self {
            sample,
            functional,
            domain,
        })
    }

    pub(crate) fn contrast(&self) -> Result<Contrast<'a>> {
        Contrast::new(self.functional, self.sample, self.functional.truncation(&self.domain))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerOptions {
    /// Points of the initial scan (per box for `d >= 2`, split evenly across axes).
    pub grid_points: usize,
    /// Bracket width (`d = 1`) or simplex diameter (`d >= 2`) at which refinement stops.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            grid_points: 64,
            tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 2 {
            return Err(Error::param("optimizer grid needs at least 2 points"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::param("optimizer tolerance must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub theta: Vec<f64>,
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub theta_hat: Vec<f64>,
    pub contrast_at_min: f64,
    /// Row-major `d x d` sandwich covariance, when computed.
    pub sigma_hat: Option<Vec<f64>>,
    pub trace: Vec<TraceEntry>,
    pub tolerance_reached: bool,
}

impl EstimatorResult {
    /// Best entry of a trace: smallest contrast, ties to the
    /// lexicographically smallest `theta`.
    fn from_trace(trace: Vec<TraceEntry>, tolerance_reached: bool) -> Self {
        let best = trace
            .iter()
            .min_by(|a, b| {
                a.contrast
                    .total_cmp(&b.contrast)
                    .then_with(|| lexicographic(&a.theta, &b.theta))
            })
            .expect("at least one evaluation")
            .clone();
        Self {
            theta_hat: best.theta,
            contrast_at_min: best.contrast,
            sigma_hat: None,
            trace,
            tolerance_reached,
        }
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

struct Recorder<'c, 'a> {
    contrast: &'c Contrast<'a>,
    domain: &'c ThetaBox,
    trace: Vec<TraceEntry>,
}

impl Recorder<'_, '_> {
    fn eval(&mut self, theta: &[f64]) -> Result<f64> {
        let theta = self.domain.clamp(theta);
        let v = self.contrast.mean(&theta)?;
        self.trace.push(TraceEntry { theta, contrast: v });
        Ok(v)
    }
}

/// `argmin_{theta in domain} P h_theta`.
///
/// `d = 1`: a uniform scan, then golden-section search on the bracket around
/// the best scan point. `d >= 2`: a product-grid scan, then Nelder–Mead from
/// the best grid point, with vertices clamped into the box. The reported
/// minimizer is the best of all evaluations.
pub fn minimize_contrast(problem: &ContrastProblem<'_>, opts: &OptimizerOptions) -> Result<EstimatorResult> {
    opts.validate()?;
    let contrast = problem.contrast()?;
    let mut rec = Recorder {
        contrast: &contrast,
        domain: &problem.domain,
        trace: Vec::new(),
    };
    if problem.domain.is_point() {
        rec.eval(problem.domain.lower())?;
        return Ok(EstimatorResult::from_trace(rec.trace, true));
    }
    let converged = if problem.domain.dim() == 1 {
        scan_and_golden(&mut rec, opts)?
    } else {
        scan_and_simplex(&mut rec, opts)?
    };
    Ok(EstimatorResult::from_trace(rec.trace, converged))
}

fn scan_and_golden(rec: &mut Recorder<'_, '_>, opts: &OptimizerOptions) -> Result<bool> {
    let (lo, hi) = (rec.domain.lower()[0], rec.domain.upper()[0]);
    let grid = UniformGrid::new(lo, hi, opts.grid_points)?;
    let mut best = (0, f64::INFINITY);
    for (i, t) in grid.points().iter().enumerate() {
        let v = rec.eval(&[*t])?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let pts = grid.points();
    let mut a = pts[best.0.saturating_sub(1)];
    let mut b = pts[(best.0 + 1).min(pts.len() - 1)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = rec.eval(&[c])?;
    let mut fd = rec.eval(&[d])?;
    let mut iterations = 0;
    while b - a > opts.tolerance && iterations < opts.max_iterations {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = rec.eval(&[c])?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = rec.eval(&[d])?;
        }
        iterations += 1;
    }
    Ok(b - a <= opts.tolerance)
}

fn scan_and_simplex(rec: &mut Recorder<'_, '_>, opts: &OptimizerOptions) -> Result<bool> {
    let d = rec.domain.dim();
    let per_axis = ((opts.grid_points as f64).powf(1.0 / d as f64).ceil() as usize).max(2);
    let axes: Vec<UniformGrid> = (0..d)
        .map(|j| UniformGrid::new(rec.domain.lower()[j], rec.domain.upper()[j], per_axis))
        .collect::<Result<_>>()?;
    let mut idx = vec![0usize; d];
    let mut best: (Vec<f64>, f64) = (Vec::new(), f64::INFINITY);
    loop {
        let theta: Vec<f64> = idx.iter().zip(&axes).map(|(i, g)| g.points()[*i]).collect();
        let v = rec.eval(&theta)?;
        if v < best.1 {
            best = (theta, v);
        }
        // odometer over the product grid, last axis fastest
        let mut j = d;
        let done = loop {
            if j == 0 {
                break true;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < axes[j].len() {
                break false;
            }
            idx[j] = 0;
        };
        if done {
            break;
        }
    }

    // Initial simplex: one grid step along each axis, inward at the upper edge.
    let mut simplex = vec![best.0.clone()];
    let mut values = vec![best.1];
    for (j, axis) in axes.iter().enumerate() {
        let mut v = best.0.clone();
        let step = axis.spacing();
        v[j] = if v[j] + step <= rec.domain.upper()[j] { v[j] + step } else { v[j] - step };
        values.push(rec.eval(&v)?);
        simplex.push(v);
    }
    let domain = rec.domain;
    let clamp = |x: Vec<f64>| domain.clamp(&x);
    let mut iterations = 0;
    loop {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|a, b| values[*a].total_cmp(&values[*b]).then(a.cmp(b)));
        simplex = order.iter().map(|i| simplex[*i].clone()).collect();
        values = order.iter().map(|i| values[*i]).collect();
        let diameter = simplex[1..]
            .iter()
            .map(|v| dist(v, &simplex[0]))
            .fold(0.0, f64::max);
        if diameter <= opts.tolerance {
            return Ok(true);
        }
        if iterations >= opts.max_iterations {
            return Ok(false);
        }
        iterations += 1;
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|v| v[j]).sum::<f64>() / d as f64)
            .collect();
        let worst = simplex[d].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = clamp(along(-1.0));
        let fr = rec.eval(&xr)?;
        if fr < values[0] {
            let xe = clamp(along(-2.0));
            let fe = rec.eval(&xe)?;
            if fe < fr {
                simplex[d] = xe;
                values[d] = fe;
            } else {
                simplex[d] = xr;
                values[d] = fr;
            }
        } else if fr < values[d - 1] {
            simplex[d] = xr;
            values[d] = fr;
        } else {
            let (xc, fc) = if fr < values[d] {
                let x = clamp(along(-0.5));
                let f = rec.eval(&x)?;
                (x, f)
            } else {
                let x = clamp(along(0.5));
                let f = rec.eval(&x)?;
                (x, f)
            };
            if fc < values[d].min(fr) {
                simplex[d] = xc;
                values[d] = fc;
            } else {
                for i in 1..=d {
                    let x: Vec<f64> = simplex[0]
                        .iter()
                        .zip(&simplex[i])
                        .map(|(b, v)| b + 0.5 * (v - b))
                        .collect();
                    values[i] = rec.eval(&x)?;
                    simplex[i] = x;
                }
            }
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
