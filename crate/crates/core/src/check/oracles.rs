//! Reference computations that share no code with the implementations
//! they validate.

/// Kronrod abscissae of the 15-point rule on `[-1, 1]` (nonnegative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Weights of the embedded 7-point Gauss rule at `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let s = f(c - r * XGK[j]) + f(c + r * XGK[j]);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (r * k, (r * (k - g)).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]` to
/// absolute tolerance `tol`, by recursive bisection.
pub fn adaptive_gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = kronrod15(f, a, b);
        if err <= tol || depth >= 40 || b - a < 1e-14 * (1.0 + a.abs()) {
            return v;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth + 1) + recurse(f, m, b, 0.5 * tol, depth + 1)
    }
    if a >= b {
        return 0.0;
    }
    recurse(f, a, b, tol, 0)
}

/// All permutations of `0..n` by Heap's algorithm (iterative form).
pub fn heap_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Central differences `(f(x + d e_j) - f(x - d e_j)) / 2d` of a
/// vector-valued map, returned as `out[j][component]`.
pub fn central_differences(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], step: f64) -> Vec<Vec<f64>> {
    (0..x.len())
        .map(|j| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[j] += step;
            down[j] -= step;
            let (fu, fd) = (f(&up), f(&down));
            fu.iter().zip(&fd).map(|(u, d)| (u - d) / (2.0 * step)).collect()
        })
        .collect()
}

/// Central differences at steps `d` and `d/2` combined by one Richardson
/// step, `(4 D(d/2) - D(d)) / 3`, which cancels the `O(d^2)` error term.
pub fn richardson_differences(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], step: f64) -> Vec<Vec<f64>> {
    let coarse = central_differences(f, x, step);
    let fine = central_differences(f, x, 0.5 * step);
    coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| c.iter().zip(f).map(|(c, f)| (4.0 * f - c) / 3.0).collect())
        .collect()
}

fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// Parameters of the dividend rate `alpha phi(x, l) phi(m, t/c)`, with
/// `phi(u, z)` the quintic smoothstep of `(u - z + eps) / (2 eps)`.
#[derive(Debug, Clone, Copy)]
pub struct DividendRate {
    pub alpha: f64,
    pub epsilon: f64,
    pub maturity_scale: f64,
}

impl DividendRate {
    pub fn value(&self, t: f64, x: f64, level: f64, maturity: f64) -> f64 {
        let e = self.epsilon;
        self.alpha
            * smoothstep((x - level + e) / (2.0 * e))
            * smoothstep((maturity - t / self.maturity_scale + e) / (2.0 * e))
    }
}

/// `int_0^{tau ^ T} e^{-rt} U(t, x_t) dt` for the step path with grid
/// `values` at spacing `h`, ruin when a value drops strictly below `xi`.
/// Every segment is integrated adaptively, split at the maturity band.
pub fn reference_dividend(
    values: &[f64],
    h: f64,
    rate: &DividendRate,
    r: f64,
    xi: f64,
    level: f64,
    maturity: f64,
    tol: f64,
) -> f64 {
    let c = rate.maturity_scale;
    let cuts = [c * (maturity - rate.epsilon), c * (maturity + rate.epsilon)];
    let steps = values.len() - 1;
    let mut total = 0.0;
    for k in 0..steps {
        let x = values[k];
        if x < xi {
            break;
        }
        let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
        let mut knots = vec![a];
        knots.extend(cuts.iter().copied().filter(|t| *t > a && *t < b));
        knots.push(b);
        for w in knots.windows(2) {
            let g = |t: f64| (-r * t).exp() * rate.value(t, x, level, maturity);
            total += adaptive_gauss_kronrod(&g, w[0], w[1], tol);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_integrates_smooth_functions() {
        let v = adaptive_gauss_kronrod(&|x: f64| x.exp(), 0.0, 1.0, 1e-14);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-14);
        let v = adaptive_gauss_kronrod(&|x: f64| x.abs().sqrt(), -1.0, 1.0, 1e-12);
        assert!((v - 4.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn heap_enumerates_every_permutation_once() {
        for n in 0..=5 {
            let mut all = heap_permutations(n);
            let total = all.len();
            assert_eq!(total, (1..=n).product::<usize>());
            all.sort();
            all.dedup();
            assert_eq!(all.len(), total);
        }
    }

    #[test]
    fn central_differences_of_quadratic() {
        let f = |x: &[f64]| vec![x[0] * x[0] + 3.0 * x[0] * x[1]];
        let d = central_differences(&f, &[1.0, 2.0], 1e-4);
        assert!((d[0][0] - 8.0).abs() < 1e-8 && (d[1][0] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn richardson_cancels_the_cubic_term() {
        let f = |x: &[f64]| vec![x[0].powi(3)];
        let plain = central_differences(&f, &[1.0], 1e-2)[0][0];
        let rich = richardson_differences(&f, &[1.0], 1e-2)[0][0];
        assert!((plain - 3.0).abs() > 1e-5);
        assert!((rich - 3.0).abs() < 1e-12);
    }
}
