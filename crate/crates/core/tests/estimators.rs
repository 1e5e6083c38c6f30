use bismut_core::diffusion::Simulator;
use bismut_core::estimators::{
    bismut_gradient, bismut_gradients, estimate_p1, estimate_p2, reconstruct_identity, McParams, Semigroup,
};
use bismut_core::fields::{DriftField, TestField};
use bismut_core::geometry::{DomainSpec, ManifoldModel, Point};
use proptest::prelude::*;

fn origin(n: usize) -> Point {
    Point::from_slice(&vec![0.0; n])
}

/// `u_t = ½u_xx` on `(−l, l)` with zero boundary values and `u_0 = 1`,
/// Crank–Nicolson in time, value at the midpoint.
fn dirichlet_heat_1d(l: f64, t: f64) -> f64 {
    let m = 400;
    let h = 2.0 * l / m as f64;
    let steps = 4000;
    let k = t / steps as f64;
    let r = 0.5 * k / (h * h);
    let interior = m - 1;
    let mut u = vec![1.0; interior];
    // Thomas algorithm for (1 + r)u_i − r/2 (u_{i−1} + u_{i+1}) = rhs_i
    let a = -0.5 * r;
    let b = 1.0 + r;
    for step in 0..steps {
        // two backward Euler steps first damp the jump at the corners
        let (aa, bb, cn) = if step < 2 { (-r, 1.0 + 2.0 * r, 0.0) } else { (a, b, 1.0) };
        let rhs: Vec<f64> = (0..interior)
            .map(|i| {
                let left = if i > 0 { u[i - 1] } else { 0.0 };
                let right = if i + 1 < interior { u[i + 1] } else { 0.0 };
                u[i] + cn * 0.5 * r * (left - 2.0 * u[i] + right)
            })
            .collect();
        let mut c = vec![0.0; interior];
        let mut d = vec![0.0; interior];
        c[0] = aa / bb;
        d[0] = rhs[0] / bb;
        for i in 1..interior {
            let den = bb - aa * c[i - 1];
            c[i] = aa / den;
            d[i] = (rhs[i] - aa * d[i - 1]) / den;
        }
        u[interior - 1] = d[interior - 1];
        for i in (0..interior - 1).rev() {
            u[i] = d[i] - c[i] * u[i + 1];
        }
    }
    u[interior / 2]
}

#[test]
fn heat_oracle_matches_its_series() {
    let t = 0.5;
    let series: f64 = (0..50)
        .map(|k| {
            let m = (2 * k + 1) as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * 4.0 / (std::f64::consts::PI * m) * (-m * m * std::f64::consts::PI.powi(2) * t / 8.0).exp()
        })
        .sum();
    assert!((dirichlet_heat_1d(1.0, t) - series).abs() < 1e-4);
}

#[test]
fn killed_semigroup_matches_dirichlet_heat_solve() {
    let e = ManifoldModel::euclidean(1);
    let zero = DriftField::zero(&e);
    let one = TestField::builtin(&e, "one").unwrap();
    let dom = DomainSpec::new(&e, origin(1), 1.0, 0.0).unwrap();
    let dt = 1e-3;
    let r = estimate_p2(&e, &zero, &one, &origin(1), 0.5, Some(&dom), &McParams::new(10_000, dt, 11)).unwrap();
    // discrete monitoring misses excursions: the effective boundary moves out by ≈ 0.5826√dt
    let exact = dirichlet_heat_1d(1.0, 0.5);
    let shifted = dirichlet_heat_1d(1.0 + 0.5826 * dt.sqrt(), 0.5);
    let slack = (shifted - exact).abs();
    assert!((r.value() - exact).abs() < 3.0 * r.se() + slack, "{} vs {exact} ± {}", r.value(), 3.0 * r.se() + slack);
}

#[test]
fn stopped_semigroup_preserves_constants() {
    let e = ManifoldModel::euclidean(1);
    let one = TestField::builtin(&e, "one").unwrap();
    let dom = DomainSpec::new(&e, origin(1), 1.0, 0.0).unwrap();
    let r = estimate_p1(&e, &DriftField::zero(&e), &one, &origin(1), 0.5, Some(&dom), &McParams::new(500, 1e-2, 1))
        .unwrap();
    assert_eq!(r.value(), 1.0);
    assert_eq!(r.se(), 0.0);
}

#[test]
fn harmonic_function_is_a_martingale_in_a_ball() {
    let e = ManifoldModel::euclidean(2);
    let u = TestField::builtin(&e, "x1x2").unwrap();
    let dom = DomainSpec::new(&e, origin(2), 1.0, 0.5).unwrap();
    let r = estimate_p1(&e, &DriftField::zero(&e), &u, &origin(2), 0.5, Some(&dom), &McParams::new(20_000, 1e-3, 2))
        .unwrap();
    assert!(r.value().abs() < 3.0 * r.se(), "{} ± {}", r.value(), r.se());
}

#[test]
fn weak_order_on_the_whole_plane() {
    let e = ManifoldModel::euclidean(2);
    let u = TestField::builtin(&e, "x1sq_minus_x2sq").unwrap();
    let x = Point::from_slice(&[0.7, -0.3]);
    let ux = u.value(&x);
    for dt in [1e-2, 1e-3] {
        let r = estimate_p1(&e, &DriftField::zero(&e), &u, &x, 0.1, None, &McParams::new(100_000, dt, 5)).unwrap();
        assert!((r.value() - ux).abs() < 3.0 * r.se(), "dt {dt}: {} vs {ux} ± {}", r.value(), r.se());
    }
}

#[test]
fn standard_error_halves_with_four_times_the_paths() {
    let e = ManifoldModel::euclidean(2);
    let u = TestField::builtin(&e, "x1").unwrap();
    let se = |n| {
        estimate_p1(&e, &DriftField::zero(&e), &u, &origin(2), 0.25, None, &McParams::new(n, 1e-2, 8))
            .unwrap()
            .se()
    };
    let ratio = se(4_000) / se(16_000);
    assert!((ratio - 2.0).abs() < 0.2, "{ratio}");
}

#[test]
fn linear_function_gradient_in_a_ball() {
    let e = ManifoldModel::euclidean(2);
    let u = TestField::builtin(&e, "x1").unwrap();
    let dom = DomainSpec::new(&e, origin(2), 1.0, 0.0).unwrap();
    let params = McParams::new(20_000, 1e-3, 4);
    let r = bismut_gradient(&e, &DriftField::zero(&e), Semigroup::P1, &u, &origin(2), 0.25, Some(&dom), &params).unwrap();
    for (c, expected) in [1.0, 0.0].iter().enumerate() {
        assert!(
            (r.estimate[c] - expected).abs() < 3.0 * r.std_error[c],
            "component {c}: {} ± {}",
            r.estimate[c],
            r.std_error[c]
        );
    }
}

#[test]
fn constant_function_has_zero_weight_mean() {
    // u ≡ 1 turns the Bismut weight itself into the estimator, whose mean vanishes
    let s = ManifoldModel::unit_sphere(2);
    let one = TestField::builtin(&s, "one").unwrap();
    let x = Point::from_slice(&[0.4, 0.1]);
    let dom = DomainSpec::new(&s, x.clone(), 0.8, 0.0).unwrap();
    let r = bismut_gradients(&s, &DriftField::zero(&s), &one, &x, 0.25, Some(&dom), &McParams::new(10_000, 1e-3, 6))
        .unwrap();
    for (v, se) in r.p1.estimate.iter().zip(&r.p1.std_error) {
        assert!(v.abs() < 3.0 * se, "{v} ± {se}");
    }
}

#[test]
fn reconstruction_identity_for_a_quadratic() {
    let e = ManifoldModel::euclidean(2);
    let u = TestField::builtin(&e, "norm_sq").unwrap();
    let dom = DomainSpec::new(&e, origin(2), 1.0, 0.5).unwrap();
    let x = Point::from_slice(&[0.2, 0.1]);
    let r = reconstruct_identity(&e, &DriftField::zero(&e), &u, &x, 0.5, Some(&dom), &McParams::new(20_000, 1e-3, 3), 20)
        .unwrap();
    let err = r.detail("abs_error").unwrap();
    assert!(err < 3.0 * r.se() + r.detail("quadrature_slack").unwrap(), "{err} ± {}", r.se());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exit_time_grows_with_the_domain(seed in any::<u64>(), r1 in 0.4f64..1.0, extra in 0.0f64..1.0) {
        let e = ManifoldModel::euclidean(2);
        let zero = DriftField::zero(&e);
        let small = DomainSpec::new(&e, origin(2), r1, 0.0).unwrap();
        let large = DomainSpec::new(&e, origin(2), r1 + extra, 0.0).unwrap();
        let a = Simulator::new(&e, &zero, Some(&small), 1e-3, 1.0).unwrap();
        let b = Simulator::new(&e, &zero, Some(&large), 1e-3, 1.0).unwrap();
        for i in 0..4 {
            let ta = a.run_path(&origin(2), seed, i, |_| {}).unwrap().exit_time;
            let tb = b.run_path(&origin(2), seed, i, |_| {}).unwrap().exit_time;
            prop_assert!(tb >= ta);
        }
    }

    #[test]
    fn paths_reproduce_from_seed_and_index(seed in any::<u64>(), idx in 0u64..1000) {
        let s = ManifoldModel::unit_sphere(2);
        let zero = DriftField::zero(&s);
        let sim = Simulator::new(&s, &zero, None, 1e-2, 0.2).unwrap();
        let a = sim.simulate_path(&Point::from_slice(&[0.3, 0.0]), seed, idx).unwrap();
        let b = sim.simulate_path(&Point::from_slice(&[0.3, 0.0]), seed, idx).unwrap();
        prop_assert_eq!(a, b);
    }
}
