//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use bismut_core::diffusion::Simulator;
use bismut_core::estimators::{
    bismut_gradient, eigen_gradient, estimate_p1, expected_exit_time, reconstruct_identity, EstimateReport, McParams,
    Semigroup,
};
use bismut_core::fields::{DriftField, TestField};
use bismut_core::geometry::{Chart, DomainSpec, ManifoldModel, ModelKind, Point, DEFAULT_RESOLUTION};
use bismut_core::verify::{
    check_lp_theorem, forms_checks, energy_checks, prelim_checks, run_sweep, write_artifacts, CheckReport, SweepSpec,
    QUADRATURE_DELTAS,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn failures(reports: &[CheckReport]) -> String {
    let bad: Vec<String> = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{}/{}/{} lhs {} rhs {}", r.theorem, r.model, r.function, r.lhs, r.rhs))
        .collect();
    if bad.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", bad.join(", "))
    }
}

fn all_pass(reports: &[CheckReport]) -> bool {
    !reports.is_empty() && reports.iter().all(|r| r.pass && r.is_consistent())
}

// ---- criterion 1: an independent finite-difference oracle -------------------

/// Fourth-order central difference of `f` along `axis`.
fn d4<T, F>(p: &Point, axis: usize, h: f64, f: F) -> T
where
    F: Fn(&Point) -> T,
    T: std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let at = |s: f64| {
        let mut q = p.clone();
        q.coords[axis] += s * h;
        f(&q)
    };
    (at(-2.0) - at(2.0) + (at(1.0) - at(-1.0)) * 8.0) * (1.0 / (12.0 * h))
}

/// `Γ[k][i][j]` from differenced metrics.
fn oracle_christoffel(m: &ManifoldModel, p: &Point) -> Vec<f64> {
    let n = m.dim();
    let g = m.metric(p).unwrap();
    let ginv = g.try_inverse().unwrap();
    let dg: Vec<DMatrix<f64>> = (0..n).map(|a| d4(p, a, 1e-3, |q| m.metric(q).unwrap())).collect();
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n)
                    .map(|l| ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                    .sum();
                out[(k * n + i) * n + j] = 0.5 * s;
            }
        }
    }
    out
}

/// `Ric_ik = ∂_jΓ^j_ik − ∂_kΓ^j_ij + Γ^j_jm Γ^m_ik − Γ^j_km Γ^m_ij`.
fn oracle_ricci(m: &ManifoldModel, p: &Point) -> DMatrix<f64> {
    let n = m.dim();
    let gamma = oracle_christoffel(m, p);
    let gm = |k: usize, i: usize, j: usize| gamma[(k * n + i) * n + j];
    let dgamma: Vec<DVector<f64>> = (0..n)
        .map(|a| d4(p, a, 1e-2, |q| DVector::from_vec(oracle_christoffel(m, q))))
        .collect();
    let dg = |a: usize, k: usize, i: usize, j: usize| dgamma[a][(k * n + i) * n + j];
    DMatrix::from_fn(n, n, |i, k| {
        let mut s = 0.0;
        for j in 0..n {
            s += dg(j, j, i, k) - dg(k, j, i, j);
            for l in 0..n {
                s += gm(j, j, l) * gm(l, i, k) - gm(j, k, l) * gm(l, i, j);
            }
        }
        s
    })
}

fn random_point(m: &ManifoldModel, rng: &mut ChaCha8Rng) -> Point {
    let n = m.dim();
    match m.kind() {
        ModelKind::Euclidean => Point::new(DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0))),
        ModelKind::FlatTorus { periods } => {
            Point::new(DVector::from_iterator(n, periods.iter().map(|l| rng.gen_range(0.0..*l))))
        }
        _ => {
            let scale = m.length_scale() * if m.sectional_curvature() > 0.0 { 1.3 } else { 0.85 };
            loop {
                let y = DVector::from_fn(n, |_, _| rng.gen_range(-scale..scale));
                if y.norm() < scale {
                    let chart = if m.sectional_curvature() > 0.0 && rng.gen_bool(0.5) {
                        Chart::Antipodal
                    } else {
                        Chart::Primary
                    };
                    return Point::with_chart(y, chart);
                }
            }
        }
    }
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(1e-300)
    }
}

fn criterion_1() -> Outcome {
    let models = vec![
        ManifoldModel::euclidean(3),
        ManifoldModel::unit_sphere(2),
        ManifoldModel::new(3, ModelKind::Sphere { radius: 2.0 }).unwrap(),
        ManifoldModel::hyperbolic(2, 1.0).unwrap(),
        ManifoldModel::hyperbolic(3, 0.5).unwrap(),
        ManifoldModel::flat_torus(vec![2.0 * PI, 3.0]).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_gamma, mut worst_ric) = (0.0f64, 0.0f64);
    for m in &models {
        for _ in 0..100 {
            let p = random_point(m, &mut rng);
            let gamma = m.christoffel(&p).map_err(|e| e.to_string())?;
            worst_gamma = worst_gamma.max(rel_err(gamma.as_slice(), &oracle_christoffel(m, &p)));
            let ric = m.ricci(&p).map_err(|e| e.to_string())?;
            worst_ric = worst_ric.max(rel_err(ric.as_slice(), oracle_ricci(m, &p).as_slice()));
        }
    }
    Ok((
        worst_gamma < 1e-4 && worst_ric < 1e-4,
        format!("{} models × 100 points, max rel error Γ {worst_gamma:.1e}, Ric {worst_ric:.1e}", models.len()),
    ))
}

// ---- criterion 2 ----------------------------------------------------------

fn criterion_2() -> Outcome {
    let s = ManifoldModel::unit_sphere(2);
    let zero = DriftField::zero(&s);
    let dt = 1e-3;
    let sim = Simulator::new(&s, &zero, None, dt, 1000.0 * dt).map_err(|e| e.to_string())?;
    let path = sim.simulate_path(&Point::from_slice(&[0.3, -0.2]), 7, 0).map_err(|e| e.to_string())?;
    let worst = path
        .q
        .iter()
        .zip(path.times())
        .map(|(q, t)| (q - DMatrix::identity(2, 2) * (-t / 2.0).exp()).norm())
        .fold(0.0, f64::max);
    Ok((
        path.len() == 1000 && worst < 5.0 * dt,
        format!("{} steps, max ‖Q − e^(−s/2) I‖ = {worst:.2e} (limit {:.1e})", path.len(), 5.0 * dt),
    ))
}

// ---- criterion 3 ----------------------------------------------------------

fn eigen_semigroup_run(workers: usize) -> Result<EstimateReport, String> {
    let s = ManifoldModel::unit_sphere(2);
    let u = TestField::builtin(&s, "cos_theta").map_err(|e| e.to_string())?;
    let x = Point::from_slice(&[0.5, 0.0]);
    let params = McParams::new(100_000, 1e-3, 42).with_workers(workers);
    estimate_p1(&s, &DriftField::zero(&s), &u, &x, 0.5, None, &params).map_err(|e| e.to_string())
}

fn criterion_3(r: &EstimateReport) -> Outcome {
    let s = ManifoldModel::unit_sphere(2);
    let u = TestField::builtin(&s, "cos_theta").map_err(|e| e.to_string())?;
    let exact = (-0.5f64).exp() * u.value(&Point::from_slice(&[0.5, 0.0]));
    let err = (r.value() - exact).abs();
    let tol = 3.0 * r.se() + 0.5 * r.dt;
    Ok((err < tol, format!("MC {:.5} vs {exact:.5}, |err| {err:.2e} < {tol:.2e}", r.value())))
}

// ---- criterion 4 ----------------------------------------------------------

fn criterion_4() -> Outcome {
    let e = ManifoldModel::euclidean(2);
    let u = TestField::builtin(&e, "x1").map_err(|e| e.to_string())?;
    let origin = Point::from_slice(&[0.0, 0.0]);
    let dom = DomainSpec::new(&e, origin.clone(), 1.0, 0.0).map_err(|e| e.to_string())?;
    let params = McParams::new(100_000, 1e-3, 42);
    let g = bismut_gradient(&e, &DriftField::zero(&e), Semigroup::P1, &u, &origin, 0.25, Some(&dom), &params)
        .map_err(|e| e.to_string())?;
    let flat_ok = (g.estimate[0] - 1.0).abs() < 3.0 * g.std_error[0] && g.estimate[1].abs() < 3.0 * g.std_error[1];

    let s = ManifoldModel::unit_sphere(2);
    let cos = TestField::builtin(&s, "cos_theta").map_err(|e| e.to_string())?;
    // |y| = 1 is the equator; the radial unit vector points towards the south pole
    let eq = Point::from_slice(&[1.0, 0.0]);
    let v = DVector::from_vec(vec![1.0 / s.conformal_factor(&eq), 0.0]);
    let r = eigen_gradient(&s, &cos, &eq, &v, &params).map_err(|e| e.to_string())?;
    let tol = 3.0 * r.se() + r.dt;
    let eigen_ok = (r.value() + 1.0).abs() < tol;
    Ok((
        flat_ok && eigen_ok,
        format!(
            "flat ({:.4} ± {:.4}, {:.4} ± {:.4}); sphere {:.4} vs −1 (tol {tol:.3})",
            g.estimate[0], g.std_error[0], g.estimate[1], g.std_error[1], r.value()
        ),
    ))
}

// ---- criteria 5–10 --------------------------------------------------------

fn criterion_5() -> Outcome {
    let r = energy_checks(&McParams::new(10_000, 1e-3, 42)).map_err(|e| e.to_string())?;
    let text: Vec<String> = r.iter().map(|c| format!("{} {:.3} ≤ {:.3}", c.model, c.lhs, c.rhs)).collect();
    Ok((all_pass(&r) && r.len() == 2, text.join(", ") + &failures(&r)))
}

fn criterion_6() -> Outcome {
    let r = prelim_checks(&McParams::new(10_000, 1e-3, 42), DEFAULT_RESOLUTION).map_err(|e| e.to_string())?;
    let ratio = r.iter().map(|c| c.rhs / c.lhs.max(1e-300)).fold(f64::INFINITY, f64::min);
    Ok((
        all_pass(&r) && r.len() == 12,
        format!("{} gradients over 6 configs, min rhs/lhs {ratio:.2}{}", r.len(), failures(&r)),
    ))
}

fn sweep_run(workers: usize) -> Result<Vec<CheckReport>, String> {
    run_sweep(&SweepSpec::default_matrix(), workers).map_err(|e| e.to_string())
}

fn criterion_7(r: &[CheckReport]) -> Outcome {
    let main = r.iter().filter(|c| c.theorem == "main").count();
    Ok((all_pass(r) && main == 15 * 15, format!("{} checks ({main} main){}", r.len(), failures(r))))
}

fn criterion_8() -> Outcome {
    let e = ManifoldModel::euclidean(2);
    let u = TestField::builtin(&e, "norm_sq").map_err(|e| e.to_string())?;
    let dom = DomainSpec::new(&e, Point::from_slice(&[0.0, 0.0]), 1.0, 0.5).map_err(|e| e.to_string())?;
    let x = Point::from_slice(&[0.2, 0.1]);
    let r = reconstruct_identity(&e, &DriftField::zero(&e), &u, &x, 0.5, Some(&dom), &McParams::new(100_000, 1e-3, 42), 20)
        .map_err(|e| e.to_string())?;
    let err = r.detail("abs_error").unwrap_or(f64::INFINITY);
    let tol = 3.0 * r.se() + r.detail("quadrature_slack").unwrap_or(0.0);
    Ok((err < tol, format!("|RHS − u(x)| = {err:.2e} < {tol:.2e}")))
}

fn criterion_9() -> Outcome {
    let torus = ManifoldModel::flat_torus(vec![2.0 * PI, 2.0 * PI]).unwrap();
    let sphere = ManifoldModel::unit_sphere(2);
    let mut r = Vec::new();
    for (m, name) in [(&torus, "sin_x1"), (&sphere, "cos_theta")] {
        let u = TestField::builtin(m, name).map_err(|e| e.to_string())?;
        for d in QUADRATURE_DELTAS {
            r.push(check_lp_theorem(m, &u, 2.0, None, d, 128).map_err(|e| e.to_string())?);
        }
    }
    Ok((all_pass(&r) && r.len() == 8, format!("{} quadrature checks{}", r.len(), failures(&r))))
}

fn criterion_10() -> Outcome {
    let r = forms_checks(&QUADRATURE_DELTAS, DEFAULT_RESOLUTION).map_err(|e| e.to_string())?;
    let has = |t: &str| r.iter().any(|c| c.theorem == t);
    let eigen_one = r
        .iter()
        .filter(|c| c.theorem.starts_with("forms_eigen") && c.config.get("lambda") == Some(&1.0))
        .count();
    Ok((
        all_pass(&r) && has("forms_d") && has("forms_codiff") && eigen_one > 0,
        format!("{} form checks, {eigen_one} eigenform checks with λ = 1{}", r.len(), failures(&r)),
    ))
}

// ---- criterion 11 ---------------------------------------------------------

fn criterion_11() -> Outcome {
    let e = ManifoldModel::euclidean(1);
    let x = Point::from_slice(&[0.0]);
    let dom = DomainSpec::new(&e, x.clone(), 1.0, 0.0).map_err(|e| e.to_string())?;
    let dt = 1e-4;
    let r = expected_exit_time(&e, &DriftField::zero(&e), &x, 10.0, &dom, &McParams::new(10_000, dt, 42))
        .map_err(|e| e.to_string())?;
    let tol = 3.0 * r.se() + 5.0 * dt.sqrt();
    let err = (r.value() - 1.0).abs();
    Ok((err < tol, format!("E[τ] ≈ {:.4} ± {:.4}, |err| {err:.3} < {tol:.3}", r.value(), r.se())))
}

// ---- criterion 12 ---------------------------------------------------------

fn same_files(a: &Path, b: &Path, names: &[&str]) -> Result<bool, String> {
    for f in names {
        let x = fs::read(a.join(f)).map_err(|e| e.to_string())?;
        let y = fs::read(b.join(f)).map_err(|e| e.to_string())?;
        if x != y {
            return Ok(false);
        }
    }
    Ok(true)
}

fn criterion_12(sweep_one: &[CheckReport], eigen_one: &EstimateReport) -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("w1"), tmp.path().join("w3"));
    write_artifacts(&a, sweep_one).map_err(|e| e.to_string())?;
    write_artifacts(&b, &sweep_run(3)?).map_err(|e| e.to_string())?;
    let sweep_same = same_files(&a, &b, &["matrix.csv", "checks.json", "summary.md"])?;
    let json = |r: &EstimateReport| serde_json::to_vec_pretty(r).expect("report serializes");
    fs::write(a.join("estimate.json"), json(eigen_one)).map_err(|e| e.to_string())?;
    fs::write(b.join("estimate.json"), json(&eigen_semigroup_run(2)?)).map_err(|e| e.to_string())?;
    let estimate_same = same_files(&a, &b, &["estimate.json"])?;
    Ok((
        sweep_same && estimate_same,
        format!("sweep artifacts identical: {sweep_same}; eigen-semigroup estimate identical: {estimate_same}"),
    ))
}

// ---- driver ---------------------------------------------------------------

fn report(id: usize, title: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let (pass, detail) = match outcome {
        Ok((ok, d)) => (ok && in_time, d),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "{} {id:>2} {title}: {detail} [{:.1} s, limit {} s{}]",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", too slow" }
    );
    pass
}

fn main() {
    let secs = Duration::from_secs;
    let mut passed = Vec::new();
    passed.push(report(1, "geometry oracle", secs(10), criterion_1));
    passed.push(report(2, "Q in constant curvature", secs(5), criterion_2));

    let mut eigen = None;
    passed.push(report(3, "eigen-semigroup identity", secs(120), || {
        let r = eigen_semigroup_run(1)?;
        let out = criterion_3(&r);
        eigen = Some(r);
        out
    }));
    passed.push(report(4, "Bismut gradients", secs(300), criterion_4));
    passed.push(report(5, "localization energy bound", secs(180), criterion_5));
    passed.push(report(6, "preliminary gradient bound", secs(600), criterion_6));

    let mut sweep = None;
    passed.push(report(7, "main theorem sweep", secs(60), || {
        let r = sweep_run(1)?;
        let out = criterion_7(&r);
        sweep = Some(r);
        out
    }));
    passed.push(report(8, "reconstruction identity", secs(300), criterion_8));
    passed.push(report(9, "Lp estimate by quadrature", secs(30), criterion_9));
    passed.push(report(10, "form estimates on the torus", secs(30), criterion_10));
    passed.push(report(11, "exit-time sanity", secs(120), criterion_11));
    // the rerun of criteria 3 and 7 is timed together
    passed.push(report(12, "reproducibility across worker counts", secs(180), || match (&sweep, &eigen) {
        (Some(s), Some(e)) => criterion_12(s, e),
        _ => Err("criteria 3 and 7 did not produce results".into()),
    }));

    let ok = passed.iter().filter(|p| **p).count();
    println!("{ok}/{} acceptance criteria passed", passed.len());
    if ok != passed.len() {
        std::process::exit(1);
    }
}
