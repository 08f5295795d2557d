use std::f64::consts::PI;

use proptest::prelude::*;

use hypoineq::estimation::{maximize, OptimizationTask};
use hypoineq::group::{HomogeneousGroup, QuasiNorm};
use hypoineq::hardy::{weight_condition, Condition, HardyParams, RGrid, Weight, WeightPair};
use hypoineq::kernels::{self, HeatKernel, PeriodicBox};
use hypoineq::quadrature::minkowski_check;
use hypoineq::report::SuiteConfig;
use hypoineq::trial::make_family;
use hypoineq::trudinger::{self as tm, TmSpec};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heisenberg_law_is_a_group(x in point(3), y in point(3), z in point(3)) {
        let g = HomogeneousGroup::heisenberg(1).unwrap();
        let l = g.law(&g.law(&x, &y), &z);
        let r = g.law(&x, &g.law(&y, &z));
        for (a, b) in l.iter().zip(&r) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let e = g.law(&x, &g.inv(&x));
        prop_assert!(e.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn dilations_are_automorphisms(x in point(3), y in point(3), r in 0.1..5.0f64) {
        let g = HomogeneousGroup::heisenberg(1).unwrap();
        let l = g.dilate(r, &g.law(&x, &y)).unwrap();
        let rr = g.law(&g.dilate(r, &x).unwrap(), &g.dilate(r, &y).unwrap());
        for (a, b) in l.iter().zip(&rr) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn quasi_norms_are_homogeneous_and_symmetric(x in point(3), r in 0.05..20.0f64) {
        for norm in [QuasiNorm::kaplan(1).unwrap(), QuasiNorm::euclidean(3)] {
            let g = norm.group();
            let d = g.dilate(r, &x).unwrap();
            prop_assert!(close(norm.eval(&d), r * norm.eval(&x), 1e-12));
            prop_assert!(close(norm.eval(&g.inv(&x)), norm.eval(&x), 1e-12));
        }
    }

    #[test]
    fn phi_paths_agree(p in 1.2..4.0f64, u in 0.1..100.0f64) {
        let s = tm::phi_truncated_series(p, u, 1.0).unwrap();
        let d = tm::phi_truncated_direct(p, u, 1.0).unwrap();
        prop_assert!(close(d, s, 1e-12));
    }

    #[test]
    fn phi_is_increasing_in_alpha(p in 1.2..4.0f64, a in 0.01..5.0f64, t in 0.1..2.0f64) {
        let lo = tm::phi_truncated(p, a, t).unwrap();
        let hi = tm::phi_truncated(p, a * 1.1, t).unwrap();
        prop_assert!(hi > lo && lo >= 0.0);
    }

    #[test]
    fn alpha_beta_is_linear(aq in 1.0..50.0f64, q in 1.0..10.0f64, s in 0.0..1.0f64, t in 0.0..1.0f64) {
        let f = |b: f64| tm::alpha_beta(aq, b, q).unwrap();
        let mid = f(q * (s + t) / 2.0);
        prop_assert!(close(mid, (f(q * s) + f(q * t)) / 2.0, 1e-12));
        prop_assert!(tm::alpha_beta(aq, q * 1.01, q).is_err());
    }

    #[test]
    fn gamma_ratio_decreases(p in 1.3..4.0f64, q in 4.0..200.0f64) {
        let t = tm::gamma_asymptotic_check(p, &[q, 2.0 * q, 4.0 * q]).unwrap();
        prop_assert!(t.decreasing);
    }

    #[test]
    fn heat_kernel_is_homogeneous(x in point(3), r in 0.2..5.0f64, t in 0.05..5.0f64) {
        let h = HeatKernel::new(3).unwrap();
        let rx: Vec<f64> = x.iter().map(|v| r * v).collect();
        prop_assert!(close(h.eval(r * r * t, &rx), r.powi(-3) * h.eval(t, &x), 1e-10));
    }

    #[test]
    fn riesz_kernel_is_homogeneous(x in point(3), r in 0.2..5.0f64, a in 0.2..2.8f64) {
        prop_assume!(x.iter().map(|v| v * v).sum::<f64>() > 1e-4);
        let n = QuasiNorm::euclidean(3);
        let rx: Vec<f64> = x.iter().map(|v| r * v).collect();
        let k = kernels::riesz_kernel(&n, a, &rx).unwrap();
        prop_assert!(close(k, r.powf(a - 3.0) * kernels::riesz_kernel(&n, a, &x).unwrap(), 1e-10));
    }

    #[test]
    fn a1_scales_with_the_weight(c in 0.1..10.0f64, q in 2.0..4.0f64) {
        let n = QuasiNorm::euclidean(2);
        let prm = HardyParams::new(2.0, q).unwrap();
        let alpha = -2.0 - 2.0 * q / 2.0;
        let a = |k: f64| {
            let pair = WeightPair::new(Weight::power(k, alpha), Weight::constant(1.0));
            weight_condition(Condition::A1, &pair, &prm, &n, &RGrid::default()).unwrap().value
        };
        prop_assert!(close(a(c), c.powf(1.0 / q) * a(1.0), 1e-9));
    }

    #[test]
    fn minkowski_holds(
        v1 in prop::collection::vec(0.0..3.0f64, 4),
        v2 in prop::collection::vec(0.0..3.0f64, 4),
        theta in 1.0..4.0f64,
    ) {
        let cuts = [0.5, 1.0, 1.7, 3.0];
        let at = |v: &[f64], x: f64| cuts.iter().position(|&c| x < c).map_or(0.0, |i| v[i]);
        let r = minkowski_check(&|x| at(&v1, x), &|x| at(&v2, x), theta, 3.0, &cuts).unwrap();
        prop_assert!(r.holds);
        prop_assert!(r.lhs <= r.rhs * (1.0 + 1e-10) + 1e-14);
    }

    #[test]
    fn maximize_reports_its_best_point(c0 in -1.0..1.0f64, c1 in -1.0..1.0f64, seed in any::<u64>(), budget in 10usize..80) {
        let f = |t: &[f64]| -(t[0] - c0).powi(2) - 2.0 * (t[1] - c1).powi(2);
        let task = OptimizationTask::new(&f, vec![(-1.5, 1.5), (-1.5, 1.5)]).with_budget(budget).with_seed(seed);
        let r = maximize(&task).unwrap();
        prop_assert!(r.evaluations <= budget);
        prop_assert!(r.theta.iter().all(|v| (-1.5..=1.5).contains(v)));
        prop_assert!(close(f(&r.theta), r.value, 1e-15) || r.value == f(&r.theta));
        prop_assert!(r.trace.iter().all(|p| p.value <= r.value));
    }

    #[test]
    fn config_round_trips(seed in 0..=i64::MAX as u64, tol in 1e-12..1e-2f64, pairs in 1usize..1_000_000, budget in 4usize..500) {
        let text = format!(
            "suites = [\"weights\", \"tm\"]\nseed = {seed}\n[quadrature]\ntolerance = {tol:e}\nmc_pairs = {pairs}\nbudget = {budget}\n"
        );
        let a = SuiteConfig::parse(&text).unwrap();
        let b = SuiteConfig::parse(&a.to_toml()).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn crit_gn_ratio_is_scale_and_dilation_invariant(s in 0.5..2.0f64, c in 0.2..5.0f64, l in 0.7..1.4f64, q in 3.0..30.0f64) {
        let n = QuasiNorm::euclidean(2);
        let f = make_family("gaussian", &n).unwrap().member(&[s]).unwrap();
        let grid = Some(PeriodicBox::new(2, 256, 80.0).unwrap());
        let base = tm::crit_gn_ratio(&f, 2.0, q, grid).unwrap();
        let scaled = tm::crit_gn_ratio(&f.scaled(c), 2.0, q, grid).unwrap();
        let dilated = tm::crit_gn_ratio(&f.dilated(l).unwrap(), 2.0, q, grid).unwrap();
        prop_assert!(close(scaled, base, 1e-10));
        prop_assert!(close(dilated, base, 1e-6));
    }

    #[test]
    fn tm_functional_grows_with_alpha(delta in 0.05..0.5f64, a in 0.5..6.0f64) {
        let n = QuasiNorm::euclidean(2);
        let f = make_family("moser-spike", &n).unwrap().member(&[delta]).unwrap();
        let f = f.scaled(1.0 / kernels::trial_sobolev_norm(&f, 1.0, 2.0, None).unwrap());
        let spec = TmSpec::local(&n, 2.0, a, 0.0, 1.0).unwrap();
        let lo = tm::tm_integral(&spec, &f).unwrap().value;
        let hi = tm::tm_integral(&spec.with_alpha(a * 1.25), &f).unwrap().value;
        prop_assert!(hi > lo && lo > 0.0);
    }
}

#[test]
fn heat_mass_is_one_in_the_plane() {
    let h = HeatKernel::new(2).unwrap();
    for t in [0.01, 0.5, 50.0] {
        assert!((h.mass(t).unwrap().value - 1.0).abs() <= 1e-8);
    }
    let unit = h.eval(1.0, &[0.0, 0.0]);
    assert!((unit - 1.0 / (4.0 * PI)).abs() <= 1e-15);
}
