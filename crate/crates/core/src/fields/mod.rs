//! Catalog of scalar functions, drift fields and one-forms with analytic
//! derivatives, plus grid scans for their sup-norms.
//!
//! All differentials are returned as chart covector components and all
//! Hessians as covariant chart components, so `|du|_g = |du| / λ` for the
//! conformal factor `λ` of the chart.

mod drift;
mod function;
mod oneform;
mod scan;

pub use drift::{drift_names, DriftField, HEIGHT_DRIFT_SCALE};
pub use function::{function_names, TestField};
pub use oneform::{oneform_names, OneFormField};
pub use scan::{scan_sup, SupNorm};

pub(crate) use drift::{chart_sign, height};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Chart, ManifoldModel, ModelKind, Point};

/// Number of random points used by each catalog self-check.
pub const SELF_CHECK_POINTS: usize = 200;

/// Deterministic random chart points spread over the region where the
/// built-in catalog entries are exercised.
pub(crate) fn sample_points(model: &ManifoldModel, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.dim();
    (0..count)
        .map(|_| match model.kind() {
            ModelKind::Euclidean => Point::new(DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0))),
            ModelKind::FlatTorus { periods } => {
                Point::new(DVector::from_iterator(n, periods.iter().map(|l| rng.gen_range(0.0..*l))))
            }
            ModelKind::Sphere { .. } | ModelKind::Hyperbolic { .. } => {
                let limit = if model.sectional_curvature() > 0.0 { 1.2 } else { 0.8 };
                let scale = limit * model.length_scale();
                let y = loop {
                    let y = DVector::from_fn(n, |_, _| rng.gen_range(-scale..scale));
                    if y.norm() < scale {
                        break y;
                    }
                };
                let chart = if model.sectional_curvature() > 0.0 && rng.gen_bool(0.5) {
                    Chart::Antipodal
                } else {
                    Chart::Primary
                };
                Point::with_chart(y, chart)
            }
        })
        .collect()
}

fn shifted(p: &Point, axis: usize, h: f64) -> Point {
    let mut q = p.clone();
    q.coords[axis] += h;
    q
}

/// Central-difference gradient of a scalar function in chart coordinates.
pub(crate) fn fd_gradient(p: &Point, h: f64, f: impl Fn(&Point) -> f64) -> DVector<f64> {
    DVector::from_fn(p.dim(), |i, _| (f(&shifted(p, i, h)) - f(&shifted(p, i, -h))) / (2.0 * h))
}

/// Central-difference matrix of second partial derivatives.
pub(crate) fn fd_second_partials(p: &Point, h: f64, f: impl Fn(&Point) -> f64) -> DMatrix<f64> {
    let n = p.dim();
    let f0 = f(p);
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        out[(i, i)] = (f(&shifted(p, i, h)) - 2.0 * f0 + f(&shifted(p, i, -h))) / (h * h);
        for j in 0..i {
            let pp = f(&shifted(&shifted(p, i, h), j, h));
            let pm = f(&shifted(&shifted(p, i, h), j, -h));
            let mp = f(&shifted(&shifted(p, i, -h), j, h));
            let mm = f(&shifted(&shifted(p, i, -h), j, -h));
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Covariant Hessian `∂_i∂_j u − Γ^k_ij ∂_k u` from finite differences.
pub(crate) fn fd_covariant_hessian(model: &ManifoldModel, p: &Point, f: impl Fn(&Point) -> f64) -> DMatrix<f64> {
    let n = model.dim();
    let grad = fd_gradient(p, 1e-5, &f);
    let mut hess = fd_second_partials(p, 1e-4, &f);
    let gamma = model.christoffel(p).expect("sample point is valid");
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += gamma.get(k, i, j) * grad[k];
            }
            hess[(i, j)] -= s;
        }
    }
    hess
}

/// Matrix `M_ij = ∂_j Z^i + Γ^i_jk Z^k` from finite differences of `Z`.
pub(crate) fn fd_covariant_derivative(
    model: &ManifoldModel,
    p: &Point,
    z: impl Fn(&Point) -> DVector<f64>,
) -> DMatrix<f64> {
    let n = model.dim();
    let h = 1e-5;
    let zp = z(p);
    let gamma = model.christoffel(p).expect("sample point is valid");
    DMatrix::from_fn(n, n, |i, j| {
        let d = (z(&shifted(p, j, h))[i] - z(&shifted(p, j, -h))[i]) / (2.0 * h);
        d + (0..n).map(|k| gamma.get(i, j, k) * zp[k]).sum::<f64>()
    })
}
