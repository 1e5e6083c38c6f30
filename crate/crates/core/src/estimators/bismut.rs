//! Bismut-type derivative estimators.
//!
//! For `x ∈ D₀` the weight is `∫₀^{t∧τ} ḣ(s) ⟨𝒬_s v, dB_s⟩`, with `h` the
//! localization process on the ball `B(x, r₀)`; without a domain the linear
//! weight `h(s) = (t − s)/t` is used. Sums are left-point (Itô) and live in the
//! initial frame at `x`, which is `id/λ(x)`, so chart components of the
//! covector are `λ(x)` times the frame components.

use serde::{Deserialize, Serialize};

use super::report::EstimateReport;
use super::semigroup::check_start;
use super::stats::{run_paths, McParams, Moments};
use crate::diffusion::{CutoffBall, HTracker, Simulator};
use crate::error::{param, Error, Result};
use crate::fields::{DriftField, TestField};
use crate::geometry::{domain_bounds, CurvatureBounds, DomainSpec, ManifoldModel, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semigroup {
    P1,
    P2,
}

/// Gradient estimates of both semigroups from one set of paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BismutReports {
    pub p1: EstimateReport,
    pub p2: EstimateReport,
    /// `E ∫ ḣ² ds` on the same paths.
    pub energy: EstimateReport,
    /// `c(φ)` of the cutoff ball; absent for the linear weight.
    pub cutoff_constant: Option<f64>,
    pub bounds: CurvatureBounds,
}

/// `(du)_x` components `i` of `d P_t u` for the chosen semigroup.
#[allow(clippy::too_many_arguments)]
pub fn bismut_gradient(
    model: &ManifoldModel,
    drift: &DriftField,
    semigroup: Semigroup,
    u: &TestField,
    x: &Point,
    t: f64,
    dom: Option<&DomainSpec>,
    params: &McParams,
) -> Result<EstimateReport> {
    let r = bismut_gradients(model, drift, u, x, t, dom, params)?;
    Ok(match semigroup {
        Semigroup::P1 => r.p1,
        Semigroup::P2 => r.p2,
    })
}

/// Both Bismut gradients and the weight energy, sharing paths.
pub fn bismut_gradients(
    model: &ManifoldModel,
    drift: &DriftField,
    u: &TestField,
    x: &Point,
    t: f64,
    dom: Option<&DomainSpec>,
    params: &McParams,
) -> Result<BismutReports> {
    params.validate()?;
    check_start(model, dom, x)?;
    if !(t.is_finite() && t > 0.0) {
        return Err(param("t", format!("horizon must be positive, got {t}")));
    }
    let n = model.dim();
    let sim = Simulator::new(model, drift, dom, params.dt, t)?;
    let dt = sim.dt();
    let (ball, bounds) = match dom {
        Some(d) => {
            let b = domain_bounds(model, d, drift)?;
            (Some(CutoffBall::new(model, x, d.r0(), &b)?), b)
        }
        None => {
            let b = if drift.is_zero() {
                let k0 = (-(n as f64 - 1.0) * model.sectional_curvature()).max(0.0);
                CurvatureBounds {
                    k0_minus: k0,
                    kz_minus: k0,
                    ..CurvatureBounds::zero()
                }
            } else {
                CurvatureBounds::zero()
            };
            (None, b)
        }
    };

    // record: [p1_0..p1_n, p2_0..p2_n, energy]
    let m = run_paths(params, 2 * n + 1, |i, out| {
        let mut weight = vec![0.0; n];
        let mut energy = 0.0;
        let mut tracker = ball.as_ref().map(|b| HTracker::new(b, t, dt));
        let end = sim.run_path(x, params.seed, i, |s| {
            let hdot = match tracker.as_mut() {
                Some(tr) => tr.advance(s.index, (s.before.coords, s.before.chart), (s.after.coords, s.after.chart), s.last).1,
                None => -1.0 / t,
            };
            if hdot != 0.0 {
                energy += hdot * hdot * s.dt;
                for (c, w) in weight.iter_mut().enumerate() {
                    let mut qdb = 0.0;
                    for r in 0..n {
                        qdb += s.before.q[c * n + r] * s.db[r];
                    }
                    *w += hdot * qdb;
                }
            }
        })?;
        let v = u.value(&end.state.point);
        let alive = if end.exited() { 0.0 } else { 1.0 };
        for c in 0..n {
            out[c] = -v * weight[c];
            out[n + c] = -alive * v * weight[c];
        }
        out[2 * n] = energy;
        Ok(())
    })?;
    let lambda = model.conformal_factor(x);
    let echo = dom.map(|d| d.echo());
    let part = |name: &str, offset: usize| {
        let mut r = EstimateReport::from_moments(name, &m, params, dt, t, echo.clone());
        r.estimate = m.mean()[offset..offset + n].iter().map(|v| v * lambda).collect();
        r.std_error = m.std_error()[offset..offset + n].iter().map(|v| v * lambda).collect();
        r
    };
    let mut energy = EstimateReport::from_moments("h_energy", &m, params, dt, t, echo.clone());
    energy.estimate = vec![m.mean()[2 * n]];
    energy.std_error = vec![m.std_error()[2 * n]];
    let c = ball.as_ref().map(|b| b.constant());
    if let Some(c) = c {
        energy.details.insert("cutoff_constant".into(), c);
    }
    Ok(BismutReports {
        p1: part("bismut_p1", 0),
        p2: part("bismut_p2", n),
        energy,
        cutoff_constant: c,
        bounds,
    })
}

/// `E ∫₀^{t∧τ} ḣ² ds` for the localization process on `B(x, radius)` along
/// paths stopped on leaving that ball.
pub fn h_energy(
    model: &ManifoldModel,
    drift: &DriftField,
    x: &Point,
    radius: f64,
    t: f64,
    params: &McParams,
) -> Result<EstimateReport> {
    let dom = DomainSpec::new(model, x.clone(), radius, 0.0)?;
    let one = TestField::builtin_with(model, "one", false)?;
    let r = bismut_gradients(model, drift, &one, x, t, Some(&dom), params)?;
    Ok(r.energy)
}

/// `(du)_x(v) = (λe/2) E[u(X_{2/λ}) ∫₀^{2/λ} ⟨𝒬_s v, dB_s⟩]` for an eigenfunction
/// `Δu = −λu` of Brownian motion on a closed model.
pub fn eigen_gradient(
    model: &ManifoldModel,
    u: &TestField,
    x: &Point,
    v: &nalgebra::DVector<f64>,
    params: &McParams,
) -> Result<EstimateReport> {
    params.validate()?;
    model.check_point(x)?;
    let lambda = u
        .eigenvalue()
        .ok_or_else(|| param("eigenvalue", format!("`{}` is not an eigenfunction", u.name())))?;
    if !(lambda > 0.0) {
        return Err(param("eigenvalue", format!("must be positive, got {lambda}")));
    }
    if !model.is_compact() {
        return Err(Error::Domain("eigen-gradient representation needs a closed model".into()));
    }
    if v.len() != model.dim() {
        return Err(param("v", "tangent vector has the wrong dimension"));
    }
    let n = model.dim();
    let t = 2.0 / lambda;
    let zero = DriftField::zero(model);
    let sim = Simulator::new(model, &zero, None, params.dt, t)?;
    let vf: Vec<f64> = v.iter().map(|c| c * model.conformal_factor(x)).collect();
    let prefactor = lambda * std::f64::consts::E / 2.0;
    let m: Moments = run_paths(params, 1, |i, out| {
        let mut weight = 0.0;
        let end = sim.run_path(x, params.seed, i, |s| {
            for r in 0..n {
                let mut qv = 0.0;
                for c in 0..n {
                    qv += s.before.q[c * n + r] * vf[c];
                }
                weight += qv * s.db[r];
            }
        })?;
        out[0] = prefactor * u.value(&end.state.point) * weight;
        Ok(())
    })?;
    let mut r = EstimateReport::from_moments("eigen_gradient", &m, params, sim.dt(), t, None);
    r.details.insert("eigenvalue".into(), lambda);
    Ok(r)
}
