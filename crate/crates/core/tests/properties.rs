//! Invariants checked over randomized inputs.

use proptest::prelude::*;
use quasilevy::diagnostics::{ks_statistic, lp_increment_distance};
use quasilevy::functionals::{DiscountedLoss, DividendParams, Mollifier, PathFunctional, ThresholdKernel, Truncation};
use quasilevy::levy_model::to_lattice;
use quasilevy::{JumpDiffusionModel, Permutation, QuasiEnsemble, SamplingScheme, SteppedPath, ThetaBox};

fn lattice_increments(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, 1..max_len).prop_map(|v| v.into_iter().map(to_lattice).collect())
}

fn increments_and_order(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<u32>)> {
    lattice_increments(max_len).prop_flat_map(|inc| {
        let order: Vec<u32> = (0..inc.len() as u32).collect();
        (Just(inc), Just(order).prop_shuffle())
    })
}

fn params(epsilon: f64) -> DividendParams {
    DividendParams {
        alpha: 1.5,
        epsilon,
        maturity_scale: 1.0,
        r: 0.4,
        xi: 0.0,
        theta_max: 10.0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn every_quasi_path_ends_at_the_observed_terminal(
        (inc, order) in increments_and_order(80),
        u in -20.0..20.0f64,
        h in 0.001..2.0f64,
    ) {
        let observed = SteppedPath::from_increments(u, h, &inc).unwrap();
        let perms = vec![Permutation::identity(inc.len()), Permutation::new(order).unwrap()];
        let e = QuasiEnsemble::new(inc, u, h, perms).unwrap();
        prop_assert_eq!(e.quasi_path(0).unwrap(), observed.clone());
        prop_assert_eq!(e.quasi_path(1).unwrap().terminal().to_bits(), observed.terminal().to_bits());
    }

    #[test]
    fn ruin_time_is_monotone_in_the_level(
        inc in lattice_increments(60),
        a in -30.0..30.0f64,
        b in -30.0..30.0f64,
    ) {
        let p = SteppedPath::from_increments(0.0, 0.25, &inc).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(p.ruin_time(lo) >= p.ruin_time(hi));
        prop_assert!(p.ruin_time(hi) <= p.horizon());
    }

    #[test]
    fn mollifier_is_sandwiched_between_indicators(
        u in -5.0..5.0f64,
        z in -5.0..5.0f64,
        du in 0.0..1.0f64,
        eps in 0.01..2.0f64,
    ) {
        let m = Mollifier::new(eps).unwrap();
        let v = m.value(u, z);
        let lower = if u >= z + eps { 1.0 } else { 0.0 };
        let upper = if u > z - eps { 1.0 } else { 0.0 };
        prop_assert!(lower <= v && v <= upper);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!(m.value(u + du, z) >= v);
    }

    #[test]
    fn dividend_is_bounded(
        inc in prop::collection::vec(-1.0..1.0f64, 1..60),
        u in 0.0..6.0f64,
        theta in 0.0..10.0f64,
        eps in 0.01..1.0f64,
    ) {
        let p = params(eps);
        let f = DiscountedLoss::mollified_dividend(&p).unwrap();
        let path = SteppedPath::from_increments(u, 0.2, &inc).unwrap();
        let v = f.evaluate(&path, &[theta]).unwrap();
        let tau = path.ruin_time(p.xi);
        prop_assert!(v >= 0.0);
        prop_assert!(v <= p.alpha * (1.0 - (-p.r * tau).exp()) / p.r + 1e-12);
        prop_assert!(v <= p.alpha / p.r);
    }

    #[test]
    fn mollified_and_indicator_dividends_agree_off_the_bands(
        inc in prop::collection::vec(-0.4..0.4f64, 1..40),
        u in 0.5..6.0f64,
        theta in 2.0..8.0f64,
        eps in 0.01..0.5f64,
    ) {
        let p = params(eps);
        let smooth = DiscountedLoss::mollified_dividend(&p).unwrap();
        let sharp = DiscountedLoss::indicator_dividend(&p).unwrap();
        let h = 0.1;
        let path = SteppedPath::from_increments(u, h, &inc).unwrap();
        let a = smooth.evaluate(&path, &[theta]).unwrap();
        let b = sharp.evaluate(&path, &[theta]).unwrap();

        // time before ruin spent in the level band or the maturity band
        let tau = path.ruin_time(p.xi);
        let (m0, m1) = (p.maturity_scale * (theta - eps), p.maturity_scale * (theta + eps));
        let mut exposed = 0.0;
        for k in 0..path.steps() {
            let (s, e) = (path.time(k), path.time(k + 1).min(tau));
            if s >= e {
                break;
            }
            let x = path.values()[k];
            if x > theta - eps && x < theta + eps {
                exposed += e - s;
            } else {
                exposed += (e.min(m1) - s.max(m0)).max(0.0);
            }
        }
        prop_assert!((a - b).abs() <= p.alpha * exposed + 1e-12);

        let avoids = path.values().iter().all(|x| *x <= theta - eps || *x >= theta + eps);
        if avoids && path.horizon() <= m0 {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn truncation_leaves_values_unchanged(
        inc in prop::collection::vec(-0.5..0.5f64, 1..200),
        u in 1.0..6.0f64,
        lo in 1.0..5.0f64,
        width in 0.0..3.0f64,
    ) {
        let p = params(0.2);
        let f = DiscountedLoss::mollified_dividend(&p).unwrap();
        let region = ThetaBox::interval(lo, lo + width).unwrap();
        let trunc: Truncation = f.truncation(&region);
        let path = SteppedPath::from_increments(u, 0.05, &inc).unwrap();
        let cut = trunc.apply(&path);
        prop_assert!(cut.steps() <= path.steps());
        for theta in [lo, lo + 0.5 * width, lo + width] {
            prop_assert_eq!(f.evaluate(&cut, &[theta]).unwrap(), f.evaluate(&path, &[theta]).unwrap());
        }
    }

    #[test]
    fn two_parameter_hessian_is_symmetric(
        inc in prop::collection::vec(-0.5..0.5f64, 1..60),
        u in 1.0..6.0f64,
        l in 1.0..6.0f64,
        m in 1.0..6.0f64,
    ) {
        let kernel = ThresholdKernel::new(1.0, 0.3, 1.0, true).unwrap();
        let f = DiscountedLoss::new(kernel, 0.5, 0.0).unwrap();
        let path = SteppedPath::from_increments(u, 0.1, &inc).unwrap();
        let hess = f.hessian(&path, &[l, m]).unwrap();
        prop_assert_eq!(hess[1], hess[2]);
    }

    #[test]
    fn ks_is_symmetric_and_bounded(
        a in prop::collection::vec(-10.0..10.0f64, 1..100),
        b in prop::collection::vec(-10.0..10.0f64, 1..100),
    ) {
        let d = ks_statistic(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
        prop_assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn terminal_increment_distance_is_zero(
        mu in -20.0..20.0f64,
        sigma in 0.0..10.0f64,
        lambda in 0.0..5.0f64,
        m in 0.1..3.0f64,
        u in -5.0..5.0f64,
        n in 1usize..200,
        seed in any::<u64>(),
    ) {
        let model = JumpDiffusionModel::surplus(mu, sigma, lambda, m, u).unwrap();
        let scheme = SamplingScheme::new(n, 0.1).unwrap();
        prop_assert_eq!(lp_increment_distance(&model, &scheme, n, 2.0, 8, seed).unwrap(), 0.0);
    }
}
