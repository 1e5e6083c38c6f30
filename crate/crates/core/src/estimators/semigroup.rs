use super::report::EstimateReport;
use super::stats::{run_paths, McParams};
use crate::diffusion::Simulator;
use crate::error::{param, Error, Result};
use crate::fields::{DriftField, TestField};
use crate::geometry::{DomainSpec, ManifoldModel, Point};

pub(crate) fn check_start(model: &ManifoldModel, dom: Option<&DomainSpec>, x: &Point) -> Result<()> {
    model.check_point(x)?;
    if let Some(d) = dom {
        if model.distance_unchecked(d.center(), x) > d.inner_radius() + 1e-12 {
            return Err(Error::Domain("evaluation point must lie in the inner ball D0".into()));
        }
    }
    Ok(())
}

/// Per-path records `(u(X_{t∧τ}), 1_{t<τ} u(X_t))` and the effective step.
fn semigroup_moments(
    model: &ManifoldModel,
    drift: &DriftField,
    u: &TestField,
    x: &Point,
    t: f64,
    dom: Option<&DomainSpec>,
    params: &McParams,
) -> Result<(super::stats::Moments, f64)> {
    params.validate()?;
    check_start(model, dom, x)?;
    let sim = Simulator::new(model, drift, dom, params.dt, t)?;
    let m = run_paths(params, 2, |i, out| {
        let end = sim.run_path(x, params.seed, i, |_| {})?;
        let v = u.value(&end.state.point);
        out[0] = v;
        out[1] = if end.exited() { 0.0 } else { v };
        Ok(())
    })?;
    Ok((m, sim.dt()))
}

fn pick(
    quantity: &str,
    m: &super::stats::Moments,
    index: usize,
    params: &McParams,
    dt: f64,
    t: f64,
    dom: Option<&DomainSpec>,
) -> EstimateReport {
    let mut r = EstimateReport::from_moments(quantity, m, params, dt, t, dom.map(|d| d.echo()));
    r.estimate = vec![m.mean()[index]];
    r.std_error = vec![m.std_error()[index]];
    r
}

/// `P¹_t u(x) = E[u(X_{t∧τ}(x))]`; without a domain, `E[u(X_t)]`.
pub fn estimate_p1(
    model: &ManifoldModel,
    drift: &DriftField,
    u: &TestField,
    x: &Point,
    t: f64,
    dom: Option<&DomainSpec>,
    params: &McParams,
) -> Result<EstimateReport> {
    let (m, dt) = semigroup_moments(model, drift, u, x, t, dom, params)?;
    Ok(pick("P1", &m, 0, params, dt, t, dom))
}

/// `P²_t u(x) = E[1_{t<τ} u(X_t(x))]`.
pub fn estimate_p2(
    model: &ManifoldModel,
    drift: &DriftField,
    u: &TestField,
    x: &Point,
    t: f64,
    dom: Option<&DomainSpec>,
    params: &McParams,
) -> Result<EstimateReport> {
    let (m, dt) = semigroup_moments(model, drift, u, x, t, dom, params)?;
    Ok(pick("P2", &m, 1, params, dt, t, dom))
}

/// `E[t ∧ τ]` with `τ` the first grid time outside `dom`.
pub fn expected_exit_time(
    model: &ManifoldModel,
    drift: &DriftField,
    x: &Point,
    t: f64,
    dom: &DomainSpec,
    params: &McParams,
) -> Result<EstimateReport> {
    params.validate()?;
    check_start(model, Some(dom), x)?;
    let sim = Simulator::new(model, drift, Some(dom), params.dt, t)?;
    let m = run_paths(params, 1, |i, out| {
        let end = sim.run_path(x, params.seed, i, |_| {})?;
        out[0] = end.exit_time.min(t);
        Ok(())
    })?;
    Ok(EstimateReport::from_moments(
        "exit_time",
        &m,
        params,
        sim.dt(),
        t,
        Some(dom.echo()),
    ))
}

/// Right-hand side of `u(x) = P¹_t u(x) − ∫₀ᵗ P²_s(Lu)(x) ds`.
///
/// The `s`-integral uses the trapezoid rule on `nodes` equally spaced times
/// snapped to the path grid, with every node evaluated on the same paths.
/// The report's details hold `u_x`, `abs_error = |RHS − u(x)|`, the `P1` term
/// and `quadrature_slack`, the gap between the trapezoid value and the
/// left-point sum over the full path grid.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_identity(
    model: &ManifoldModel,
    drift: &DriftField,
    u: &TestField,
    x: &Point,
    t: f64,
    dom: Option<&DomainSpec>,
    params: &McParams,
    nodes: usize,
) -> Result<EstimateReport> {
    if nodes < 2 {
        return Err(param("nodes", format!("need at least 2 quadrature nodes, got {nodes}")));
    }
    params.validate()?;
    check_start(model, dom, x)?;
    let sim = Simulator::new(model, drift, dom, params.dt, t)?;
    let steps = sim.steps();
    let dt = sim.dt();
    let idx: Vec<usize> = (0..nodes)
        .map(|j| ((j as f64 * steps as f64) / (nodes - 1) as f64).round() as usize)
        .collect();
    // trapezoid weights on the snapped node times, accumulated per grid index
    let mut weight = vec![0.0; steps + 1];
    for w in idx.windows(2) {
        let h = (w[1] - w[0]) as f64 * dt;
        weight[w[0]] += 0.5 * h;
        weight[w[1]] += 0.5 * h;
    }
    let lu = |y: &[f64], chart| {
        if drift.is_zero() {
            0.5 * u.laplacian_raw(y, chart)
        } else {
            0.5 * u.generator2(&Point::with_chart(nalgebra::DVector::from_column_slice(y), chart), drift)
        }
    };
    let m = run_paths(params, 3, |i, out| {
        let (mut trap, mut full) = (0.0, 0.0);
        let end = sim.run_path(x, params.seed, i, |s| {
            let v = lu(s.before.coords, s.before.chart);
            trap += weight[s.index] * v;
            full += dt * v;
        })?;
        if !end.exited() {
            trap += weight[steps] * lu(end.state.point.coords.as_slice(), end.state.point.chart);
        }
        let p1 = u.value(&end.state.point);
        out[0] = p1 - trap;
        out[1] = p1 - full;
        out[2] = p1;
        Ok(())
    })?;
    let mut r = EstimateReport::from_moments("reconstruction", &m, params, dt, t, dom.map(|d| d.echo()));
    let ux = u.value(x);
    let mean = m.mean().to_vec();
    r.estimate = vec![mean[0]];
    r.std_error = vec![m.std_error()[0]];
    r.details.insert("u_x".into(), ux);
    r.details.insert("abs_error".into(), (mean[0] - ux).abs());
    r.details.insert("p1".into(), mean[2]);
    r.details.insert("full_grid".into(), mean[1]);
    r.details.insert("quadrature_slack".into(), (mean[0] - mean[1]).abs());
    r.details.insert("nodes".into(), nodes as f64);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> (ManifoldModel, DriftField, DomainSpec) {
        let e = ManifoldModel::euclidean(1);
        let z = DriftField::zero(&e);
        let d = DomainSpec::new(&e, Point::from_slice(&[0.0]), 1.0, 0.5).unwrap();
        (e, z, d)
    }

    #[test]
    fn zero_horizon_returns_u_exactly() {
        let (e, z, d) = line();
        let u = TestField::builtin(&e, "x1").unwrap();
        let x = Point::from_slice(&[0.25]);
        let p = McParams::new(10, 1e-3, 1);
        assert_eq!(estimate_p1(&e, &z, &u, &x, 0.0, Some(&d), &p).unwrap().value(), 0.25);
        assert_eq!(estimate_p2(&e, &z, &u, &x, 0.0, Some(&d), &p).unwrap().value(), 0.25);
        let r = reconstruct_identity(&e, &z, &u, &x, 0.0, Some(&d), &p, 5).unwrap();
        assert_eq!(r.value(), 0.25);
    }

    #[test]
    fn constants_are_preserved_by_p1() {
        let (e, z, d) = line();
        let one = TestField::builtin(&e, "one").unwrap();
        let r = estimate_p1(&e, &z, &one, &Point::from_slice(&[0.0]), 1.0, Some(&d), &McParams::new(200, 1e-3, 3)).unwrap();
        assert_eq!(r.value(), 1.0);
        assert_eq!(r.se(), 0.0);
        let s = estimate_p2(&e, &z, &one, &Point::from_slice(&[0.0]), 1.0, Some(&d), &McParams::new(200, 1e-3, 3)).unwrap();
        assert!((0.0..=1.0).contains(&s.value()));
    }

    #[test]
    fn argument_errors() {
        let (e, z, d) = line();
        let u = TestField::builtin(&e, "one").unwrap();
        let x = Point::from_slice(&[0.0]);
        assert!(estimate_p1(&e, &z, &u, &x, 1.0, Some(&d), &McParams::new(1, 1e-3, 0)).is_err());
        assert!(estimate_p1(&e, &z, &u, &Point::from_slice(&[0.8]), 1.0, Some(&d), &McParams::new(4, 1e-3, 0)).is_err());
        assert!(reconstruct_identity(&e, &z, &u, &x, 1.0, Some(&d), &McParams::new(4, 1e-3, 0), 1).is_err());
    }
}
