//! Named check suites.
//!
//! The default suite is deterministic: the theorem matrix plus the quadrature
//! and form checks. The full suite adds the drifted matrix and the Monte Carlo
//! checks, which use the caller's path count, step and seed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::checks::{
    check_eigen_global, check_forms_theorem, check_energy_bound, check_lp_theorem, check_prelim, FormsVariant,
};
use super::report::CheckReport;
use super::sweep::{run_sweep, SweepSpec};
use crate::error::{param, Result};
use crate::estimators::McParams;
use crate::fields::{oneform_names, DriftField, OneFormField, TestField};
use crate::geometry::{DomainSpec, ManifoldModel, Point, DEFAULT_RESOLUTION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Default,
    Full,
}

impl std::str::FromStr for Suite {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Suite::Default),
            "full" => Ok(Suite::Full),
            other => Err(param("suite", format!("expected `default` or `full`, got `{other}`"))),
        }
    }
}

/// δ values of the quadrature and form checks.
pub const QUADRATURE_DELTAS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
/// Nodes per axis of the quadrature checks.
pub const QUADRATURE_POINTS: usize = 128;
/// Horizon of the Monte Carlo checks.
pub const MC_HORIZON: f64 = 0.25;

fn torus2() -> ManifoldModel {
    ManifoldModel::flat_torus(vec![2.0 * PI, 2.0 * PI]).expect("valid torus")
}

/// `Lᵖ` checks with `p = 2` on the torus and the sphere, plus the global
/// eigenfunction bound.
pub fn quadrature_checks(deltas: &[f64], points: usize) -> Result<Vec<CheckReport>> {
    let sphere = ManifoldModel::unit_sphere(2);
    let torus = torus2();
    let cases = [(&torus, "sin_x1"), (&sphere, "cos_theta")];
    let mut out = Vec::new();
    for (model, name) in cases {
        let u = TestField::builtin_with(model, name, false)?;
        for &d in deltas {
            out.push(check_lp_theorem(model, &u, 2.0, None, d, points)?);
        }
    }
    for (model, name) in [(&sphere, "cos_theta"), (&sphere, "zonal2"), (&torus, "sin_x1")] {
        let u = TestField::builtin_with(model, name, false)?;
        out.push(check_eigen_global(model, &u, points)?);
    }
    Ok(out)
}

/// Every form estimate for every catalog 1-form on the 2π-torus; the eigenform
/// variants skip harmonic forms.
pub fn forms_checks(deltas: &[f64], resolution: f64) -> Result<Vec<CheckReport>> {
    let torus = torus2();
    let dom = DomainSpec::new(&torus, Point::from_slice(&[1.0, 1.0]), 1.0, 0.5)?;
    let mut out = Vec::new();
    for name in oneform_names(&torus) {
        let alpha = OneFormField::builtin_with(&torus, name, false)?;
        let harmonic = alpha.eigenvalue().is_none_or(|l| l <= 0.0);
        for variant in FormsVariant::ALL {
            if variant.is_eigen() && harmonic {
                continue;
            }
            for &d in deltas {
                out.push(check_forms_theorem(&torus, &alpha, variant, d, &dom, resolution)?);
            }
        }
    }
    Ok(out)
}

/// The two energy checks: a Euclidean disc and a spherical cap, both of radius 1.
pub fn energy_checks(params: &McParams) -> Result<Vec<CheckReport>> {
    let e = ManifoldModel::euclidean(2);
    let s = ManifoldModel::unit_sphere(2);
    Ok(vec![
        check_energy_bound(&e, &DriftField::zero(&e), &Point::from_slice(&[0.0, 0.0]), 1.0, MC_HORIZON, params)?,
        check_energy_bound(&s, &DriftField::zero(&s), &Point::from_slice(&[1.0, 0.0]), 1.0, MC_HORIZON, params)?,
    ])
}

/// (model, center, function, drift) of the six gradient-bound configurations.
pub fn prelim_configs() -> Vec<(ManifoldModel, Point, &'static str, &'static str)> {
    let e = ManifoldModel::euclidean(2);
    let s = ManifoldModel::unit_sphere(2);
    let h = ManifoldModel::hyperbolic(2, 1.0).expect("valid curvature");
    let origin = Point::from_slice(&[0.0, 0.0]);
    vec![
        (e.clone(), origin.clone(), "x1", "zero"),
        (e, origin.clone(), "x1x2", "ou"),
        (s.clone(), Point::from_slice(&[1.0, 0.0]), "cos_theta", "zero"),
        (s, Point::from_slice(&[1.0, 0.0]), "cos_theta", "height_gradient"),
        (torus2(), Point::from_slice(&[1.0, 1.0]), "sin_x1", "zero"),
        (h, origin, "sech2_r", "zero"),
    ]
}

/// Gradient bounds of both semigroups at the center of `B(x, 1)`, `D₀ = B(x, ½)`.
pub fn prelim_checks(params: &McParams, resolution: f64) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for (model, x, function, drift) in prelim_configs() {
        let u = TestField::builtin_with(&model, function, false)?;
        let z = DriftField::builtin_with(&model, drift, false)?;
        let dom = DomainSpec::new(&model, x.clone(), 1.0, 0.5)?;
        for mut r in check_prelim(&model, &z, &dom, &u, &x, MC_HORIZON, params, resolution)? {
            if drift != "zero" {
                r.model = format!("{}+{drift}", r.model);
            }
            out.push(r);
        }
    }
    Ok(out)
}

/// Runs a suite; `workers` sizes the sweep pool and, unless `params.workers`
/// is already set, the Monte Carlo pool.
pub fn run_suite(suite: Suite, params: &McParams, workers: usize) -> Result<Vec<CheckReport>> {
    let spec = match suite {
        Suite::Default => SweepSpec::default_matrix(),
        Suite::Full => SweepSpec::full_matrix(),
    };
    let mut out = run_sweep(&spec, workers)?;
    out.extend(quadrature_checks(&QUADRATURE_DELTAS, QUADRATURE_POINTS)?);
    out.extend(forms_checks(&QUADRATURE_DELTAS, DEFAULT_RESOLUTION)?);
    if suite == Suite::Full {
        let mut p = *params;
        if p.workers == 0 {
            p.workers = workers;
        }
        out.extend(energy_checks(&p)?);
        out.extend(prelim_checks(&p, DEFAULT_RESOLUTION)?);
    }
    Ok(out)
}
