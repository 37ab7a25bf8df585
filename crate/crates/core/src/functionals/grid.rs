//! Whole-grid accumulation of `sum_paths h_theta(path)`.
//!
//! Evaluating a contrast on a dense parameter grid one point at a time costs
//! `grid size x path length` per path. For the dividend functional each path
//! step contributes to the grid in at most four index ranges (fully paid,
//! level band, maturity band, nothing), so a step can be booked in O(1)
//! amortized work with difference arrays. The polynomial level band is
//! stored as Taylor coefficients around block centres; the maturity band
//! depends on the path only through whether the level factor is 1, so it is
//! handled by per-step counters against a precomputed table.

use super::loss::{discount_integral, segment_weight, LossKernel, ThresholdKernel};
use super::PathFunctional;
use crate::domain::UniformGrid;
use crate::error::{Error, Result};
use crate::path::SteppedPath;

/// Mergeable accumulation state; merging is elementwise addition.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBuffer {
    slots: Vec<f64>,
}

impl GridBuffer {
    pub fn zeros(len: usize) -> Self {
        Self { slots: vec![0.0; len] }
    }

    pub fn merge(&mut self, other: &GridBuffer) {
        assert_eq!(self.slots.len(), other.slots.len(), "buffers of different profilers");
        for (a, b) in self.slots.iter_mut().zip(&other.slots) {
            *a += b;
        }
    }
}

/// Accumulates `h_theta(path)` over many paths for every point of a grid.
pub trait GridProfiler: Send + Sync {
    fn grid(&self) -> &[f64];

    fn buffer(&self) -> GridBuffer;

    fn accumulate(&self, path: &SteppedPath, buf: &mut GridBuffer) -> Result<()>;

    /// `sum_paths h_{theta_i}(path)` for each grid point.
    fn finish(&self, buf: &GridBuffer) -> Vec<f64>;
}

pub(crate) struct NegatedProfiler<'a>(pub Box<dyn GridProfiler + 'a>);

impl GridProfiler for NegatedProfiler<'_> {
    fn grid(&self) -> &[f64] {
        self.0.grid()
    }
    fn buffer(&self) -> GridBuffer {
        self.0.buffer()
    }
    fn accumulate(&self, path: &SteppedPath, buf: &mut GridBuffer) -> Result<()> {
        self.0.accumulate(path, buf)
    }
    fn finish(&self, buf: &GridBuffer) -> Vec<f64> {
        self.0.finish(buf).into_iter().map(|v| -v).collect()
    }
}

/// Fallback that evaluates the functional at every grid point.
pub struct PointwiseProfiler<'a, F: ?Sized> {
    f: &'a F,
    grid: Vec<f64>,
}

impl<'a, F: PathFunctional + ?Sized> PointwiseProfiler<'a, F> {
    pub fn new(f: &'a F, grid: &UniformGrid) -> Self {
        Self {
            f,
            grid: grid.points().to_vec(),
        }
    }
}

impl<F: PathFunctional + ?Sized> GridProfiler for PointwiseProfiler<'_, F> {
    fn grid(&self) -> &[f64] {
        &self.grid
    }
    fn buffer(&self) -> GridBuffer {
        GridBuffer::zeros(self.grid.len())
    }
    fn accumulate(&self, path: &SteppedPath, buf: &mut GridBuffer) -> Result<()> {
        for (slot, theta) in buf.slots.iter_mut().zip(&self.grid) {
            *slot += self.f.evaluate(path, &[*theta])?;
        }
        Ok(())
    }
    fn finish(&self, buf: &GridBuffer) -> Vec<f64> {
        buf.slots.clone()
    }
}

const TAYLOR_TERMS: usize = 6;

/// Fast profiler for the single-parameter mollified dividend functional.
pub struct DividendProfiler {
    kernel: ThresholdKernel,
    xi: f64,
    h: f64,
    grid: Vec<f64>,
    lo: f64,
    spacing: f64,
    block: usize,
    blocks: usize,
    centres: Vec<f64>,
    /// Flat-segment weight `alpha * int e^{-rt}` per step.
    flat: Vec<f64>,
    /// Maturity band `[band_lo[k], band_hi[k])` of step `k`.
    band_lo: Vec<usize>,
    band_hi: Vec<usize>,
    /// Offsets into `table` per step.
    offsets: Vec<usize>,
    table: Vec<f64>,
}

impl DividendProfiler {
    pub fn new(kernel: ThresholdKernel, r: f64, xi: f64, grid: &UniformGrid, h: f64) -> Result<Self> {
        if kernel.split {
            return Err(Error::param("grid profiling needs the single-parameter dividend kernel"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::param(format!("grid spacing must be > 0, got {h}")));
        }
        let points = grid.points().to_vec();
        let n = points.len();
        let eps = kernel.epsilon();
        let spacing = grid.spacing();
        let block = if spacing > 0.0 {
            ((2.0 * eps / spacing).floor() as usize).clamp(1, 64)
        } else {
            1
        };
        let blocks = n.div_ceil(block);
        let centres = (0..blocks)
            .map(|b| grid.lo() + (b * block) as f64 * spacing + 0.5 * (block - 1) as f64 * spacing)
            .collect();

        let windows: Vec<(f64, f64)> = points.iter().map(|t| kernel.window(&[*t])).collect();
        let last_t2 = windows.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max);
        let (mut flat, mut band_lo, mut band_hi, mut offsets, mut table) =
            (Vec::new(), Vec::new(), Vec::new(), vec![0], Vec::new());
        let mut k = 0usize;
        loop {
            let a = k as f64 * h;
            if a >= last_t2 {
                break;
            }
            let b = (k + 1) as f64 * h;
            let lo = windows.partition_point(|w| w.1 <= a);
            let hi = lo + windows[lo..].partition_point(|w| w.0 < b);
            flat.push(kernel.alpha * discount_integral(r, a, b));
            for theta in &points[lo..hi] {
                table.push(segment_weight(&kernel, r, a, b, *theta));
            }
            band_lo.push(lo);
            band_hi.push(hi);
            offsets.push(table.len());
            k += 1;
        }
        Ok(Self {
            kernel,
            xi,
            h,
            grid: points,
            lo: grid.lo(),
            spacing,
            block,
            blocks,
            centres,
            flat,
            band_lo,
            band_hi,
            offsets,
            table,
        })
    }

    fn steps(&self) -> usize {
        self.flat.len()
    }

    fn n(&self) -> usize {
        self.grid.len()
    }

    // Buffer layout: [const diff (n+1) | taylor diffs (6 * blocks * (block+1)) | direct (n) | counters (steps)]
    fn taylor_base(&self) -> usize {
        self.n() + 1
    }

    fn direct_base(&self) -> usize {
        self.taylor_base() + TAYLOR_TERMS * self.blocks * (self.block + 1)
    }

    fn counter_base(&self) -> usize {
        self.direct_base() + self.n()
    }

    #[inline]
    fn coordinate(&self, x: f64, theta: f64) -> f64 {
        let eps = self.kernel.epsilon();
        (x - theta + eps) / (2.0 * eps)
    }

    /// First index `i >= from` with `coordinate(x, grid[i]) < bound` (the
    /// coordinate decreases along the grid).
    fn first_below(&self, x: f64, bound: f64, strict: bool) -> usize {
        let n = self.n();
        let below = |i: usize| {
            let s = self.kernel.mollifier.coordinate(x, self.grid[i]);
            if strict {
                s < bound
            } else {
                s <= bound
            }
        };
        let eps = self.kernel.epsilon();
        let guess = if self.spacing > 0.0 {
            let g = (x + eps - 2.0 * eps * bound - self.lo) / self.spacing;
            if g <= 0.0 {
                0
            } else {
                (g.floor() as usize).min(n)
            }
        } else {
            0
        };
        let mut i = guess;
        while i > 0 && below(i - 1) {
            i -= 1;
        }
        while i < n && !below(i) {
            i += 1;
        }
        i
    }

    fn add_polynomial(&self, slots: &mut [f64], from: usize, to: usize, x: f64, w: f64) {
        let eps = self.kernel.epsilon();
        let a = -1.0 / (2.0 * eps);
        let stride = self.block + 1;
        let mut i = from;
        while i < to {
            let b = i / self.block;
            let end = ((b + 1) * self.block).min(to);
            let s = self.coordinate(x, self.centres[b]);
            let derivs = [
                s * s * s * (s * (6.0 * s - 15.0) + 10.0),
                30.0 * s * s * (1.0 - s) * (1.0 - s),
                60.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
                60.0 - 360.0 * s + 360.0 * s * s,
                -360.0 + 720.0 * s,
                720.0,
            ];
            let mut scale = w;
            for (j, d) in derivs.iter().enumerate() {
                if j > 0 {
                    scale *= a / j as f64;
                }
                let base = self.taylor_base() + (j * self.blocks + b) * stride;
                slots[base + (i - b * self.block)] += scale * d;
                slots[base + (end - b * self.block)] -= scale * d;
            }
            i = end;
        }
    }
}

impl GridProfiler for DividendProfiler {
    fn grid(&self) -> &[f64] {
        &self.grid
    }

    fn buffer(&self) -> GridBuffer {
        GridBuffer::zeros(self.counter_base() + self.steps())
    }

    fn accumulate(&self, path: &SteppedPath, buf: &mut GridBuffer) -> Result<()> {
        if path.h() != self.h {
            return Err(Error::param(format!(
                "profiler built for spacing {} got a path with spacing {}",
                self.h,
                path.h()
            )));
        }
        let n = self.n();
        let slots = &mut buf.slots;
        let values = path.values();
        for k in 0..path.steps().min(self.steps()) {
            let x = values[k];
            if x < self.xi {
                break;
            }
            let (lo, hi) = (self.band_lo[k], self.band_hi[k]);
            let full = self.first_below(x, 1.0, true);
            let none = self.first_below(x, 0.0, false);
            // Past the maturity band: level factor only.
            if hi < n {
                let w = self.flat[k];
                let c_end = full.max(hi);
                if c_end > hi {
                    slots[hi] += w;
                    slots[c_end] -= w;
                }
                let p_end = none.max(hi);
                if p_end > c_end {
                    self.add_polynomial(slots, c_end, p_end, x, w);
                }
            }
            if lo < hi {
                if full >= hi {
                    slots[self.counter_base() + k] += 1.0;
                } else if none > lo {
                    let row = &self.table[self.offsets[k]..self.offsets[k + 1]];
                    let direct = self.direct_base();
                    let m = &self.kernel.mollifier;
                    for (i, j) in (lo..hi).zip(row) {
                        slots[direct + i] += m.value(x, self.grid[i]) * j;
                    }
                }
            }
        }
        Ok(())
    }

    fn finish(&self, buf: &GridBuffer) -> Vec<f64> {
        let n = self.n();
        let slots = &buf.slots;
        let mut out = vec![0.0; n];
        let mut run = 0.0;
        for (i, o) in out.iter_mut().enumerate() {
            run += slots[i];
            *o = run;
        }
        let stride = self.block + 1;
        for b in 0..self.blocks {
            let mut coef = [0.0; TAYLOR_TERMS];
            for local in 0..self.block {
                let i = b * self.block + local;
                if i >= n {
                    break;
                }
                let d = self.grid[i] - self.centres[b];
                let mut v = 0.0;
                for j in (0..TAYLOR_TERMS).rev() {
                    coef[j] += slots[self.taylor_base() + (j * self.blocks + b) * stride + local];
                    v = v * d + coef[j];
                }
                out[i] += v;
            }
        }
        for (o, d) in out.iter_mut().zip(&slots[self.direct_base()..self.direct_base() + n]) {
            *o += d;
        }
        for k in 0..self.steps() {
            let count = slots[self.counter_base() + k];
            if count != 0.0 {
                let row = &self.table[self.offsets[k]..self.offsets[k + 1]];
                for (o, j) in out[self.band_lo[k]..self.band_hi[k]].iter_mut().zip(row) {
                    *o += count * j;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{DiscountedLoss, DividendParams, Negated};
    use crate::levy_model::{simulate_increments, JumpDiffusionModel, SamplingScheme};

    fn check_against_pointwise(p: DividendParams, grid_points: usize, h: f64, paths: usize) {
        let f = DiscountedLoss::mollified_dividend(&p).unwrap();
        let grid = UniformGrid::new(p.xi, p.theta_max, grid_points).unwrap();
        let fast = f.grid_profiler(&grid, h).unwrap();
        let slow = PointwiseProfiler::new(&f, &grid);
        let model = JumpDiffusionModel::surplus(20.0, 10.0, 5.0, 3.0, 6.0).unwrap();
        let scheme = SamplingScheme::covering(p.theta_max + 1.0, h).unwrap();
        let (mut bf, mut bs) = (fast.buffer(), slow.buffer());
        for seed in 0..paths as u64 {
            let inc = simulate_increments(&model, &scheme, seed).unwrap();
            let path = SteppedPath::from_increments(model.u0, h, &inc).unwrap();
            fast.accumulate(&path, &mut bf).unwrap();
            slow.accumulate(&path, &mut bs).unwrap();
        }
        let (a, b) = (fast.finish(&bf), slow.finish(&bs));
        for (i, (x, y)) in a.iter().zip(&b).enumerate() {
            assert!((x - y).abs() <= 1e-11 * paths as f64, "theta {} fast {x} slow {y}", grid.points()[i]);
        }
    }

    #[test]
    fn matches_pointwise_on_fine_grid() {
        let p = DividendParams {
            theta_max: 8.0,
            ..DividendParams::default()
        };
        check_against_pointwise(p, 700, 0.05, 40);
    }

    #[test]
    fn matches_pointwise_on_coarse_grid_and_wide_band() {
        let p = DividendParams {
            alpha: 3.0,
            epsilon: 0.7,
            maturity_scale: 0.6,
            r: 0.2,
            xi: 1.0,
            theta_max: 9.0,
        };
        check_against_pointwise(p, 33, 0.3, 30);
        check_against_pointwise(p, 1500, 0.01, 5);
    }

    #[test]
    fn negation_flips_profile() {
        let p = DividendParams::default();
        let f = Negated(DiscountedLoss::mollified_dividend(&p).unwrap());
        let grid = UniformGrid::new(1.0, 20.0, 50).unwrap();
        let prof = f.grid_profiler(&grid, 0.5).unwrap();
        let mut buf = prof.buffer();
        let path = SteppedPath::from_increments(10.0, 0.5, &[0.5; 50]).unwrap();
        prof.accumulate(&path, &mut buf).unwrap();
        let out = prof.finish(&buf);
        for (theta, v) in grid.points().iter().zip(&out) {
            let direct = f.evaluate(&path, &[*theta]).unwrap();
            assert!((v - direct).abs() < 1e-12);
        }
    }
}
