//! Finite-difference cross-checks of the analytic connection and curvature.
//!
//! Christoffel symbols are rebuilt from central differences of the metric,
//! the Riemann tensor from central differences of those symbols, and Ricci
//! by contraction. Nothing here calls the analytic Christoffel code.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::model::{Christoffel, ManifoldModel, Point, Riemann};
use crate::error::Result;

/// Metric step of the Christoffel oracle.
pub const METRIC_STEP: f64 = 1e-4;
/// Step used to differentiate the finite-difference Christoffel symbols.
pub const CONNECTION_STEP: f64 = 1e-3;
/// Relative tolerance of [`geometry_self_check`].
pub const ORACLE_TOLERANCE: f64 = 1e-4;

fn shifted(p: &Point, axis: usize, h: f64) -> Point {
    let mut q = p.clone();
    q.coords[axis] += h;
    q
}

/// `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)` with differenced metric.
pub fn fd_christoffel(model: &ManifoldModel, p: &Point, h: f64) -> Result<Christoffel> {
    let n = model.dim();
    let g = model.metric(p)?;
    let ginv = g.clone().try_inverse().unwrap_or_else(|| DMatrix::identity(n, n));
    let mut dg = Vec::with_capacity(n);
    for a in 0..n {
        let plus = model.metric(&shifted(p, a, h))?;
        let minus = model.metric(&shifted(p, a, -h))?;
        dg.push((plus - minus) / (2.0 * h));
    }
    let mut gamma = Christoffel::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                }
                gamma.set(k, i, j, 0.5 * s);
            }
        }
    }
    Ok(gamma)
}

/// `R^l_ijk = ∂_j Γ^l_ki − ∂_k Γ^l_ji + Γ^l_jm Γ^m_ki − Γ^l_km Γ^m_ji`.
pub fn fd_riemann(model: &ManifoldModel, p: &Point, h: f64, metric_step: f64) -> Result<Riemann> {
    let n = model.dim();
    let gamma = fd_christoffel(model, p, metric_step)?;
    let mut dgamma = Vec::with_capacity(n);
    for a in 0..n {
        let plus = fd_christoffel(model, &shifted(p, a, h), metric_step)?;
        let minus = fd_christoffel(model, &shifted(p, a, -h), metric_step)?;
        let d: Vec<f64> = plus
            .as_slice()
            .iter()
            .zip(minus.as_slice())
            .map(|(x, y)| (x - y) / (2.0 * h))
            .collect();
        dgamma.push(d);
    }
    let dg = |a: usize, k: usize, i: usize, j: usize| dgamma[a][(k * n + i) * n + j];
    let mut r = Riemann::zeros(n);
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = dg(j, l, k, i) - dg(k, l, j, i);
                    for m in 0..n {
                        v += gamma.get(l, j, m) * gamma.get(m, k, i) - gamma.get(l, k, m) * gamma.get(m, j, i);
                    }
                    r.set(l, i, j, k, v);
                }
            }
        }
    }
    Ok(r)
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = b.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(1e-12)
    }
}

/// Outcome of [`geometry_self_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryCheck {
    pub model: String,
    pub points: usize,
    pub christoffel_max_rel_error: f64,
    pub ricci_max_rel_error: f64,
    /// Largest `|Γ^k_ij − Γ^k_ji|` of the analytic symbols.
    pub symmetry_defect: f64,
    /// Smallest metric eigenvalue seen.
    pub min_metric_eigenvalue: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares the analytic Christoffel symbols and Ricci tensor with the
/// finite-difference oracles at `points` pseudo-random chart points.
pub fn geometry_self_check(model: &ManifoldModel, points: usize, seed: u64) -> Result<GeometryCheck> {
    let n = model.dim();
    let mut out = GeometryCheck {
        model: model.name(),
        points,
        christoffel_max_rel_error: 0.0,
        ricci_max_rel_error: 0.0,
        symmetry_defect: 0.0,
        min_metric_eigenvalue: f64::INFINITY,
        tolerance: ORACLE_TOLERANCE,
        pass: false,
    };
    for p in crate::fields::sample_points(model, points, seed) {
        let g = model.metric(&p)?;
        out.min_metric_eigenvalue = out.min_metric_eigenvalue.min(g.symmetric_eigenvalues().min());
        let exact = model.christoffel(&p)?;
        let fd = fd_christoffel(model, &p, METRIC_STEP)?;
        out.christoffel_max_rel_error = out
            .christoffel_max_rel_error
            .max(relative_error(exact.as_slice(), fd.as_slice()));
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out.symmetry_defect = out.symmetry_defect.max((exact.get(k, i, j) - exact.get(k, j, i)).abs());
                }
            }
        }
        let ric = model.ricci(&p)?;
        let fd_ric = fd_riemann(model, &p, CONNECTION_STEP, METRIC_STEP)?.ricci();
        out.ricci_max_rel_error = out
            .ricci_max_rel_error
            .max(relative_error(ric.as_slice(), fd_ric.as_slice()));
    }
    out.pass = out.christoffel_max_rel_error < ORACLE_TOLERANCE
        && out.ricci_max_rel_error < ORACLE_TOLERANCE
        && out.symmetry_defect < 1e-12
        && out.min_metric_eigenvalue > 0.0;
    Ok(out)
}
