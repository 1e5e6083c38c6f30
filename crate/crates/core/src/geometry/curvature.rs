use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::{BallGrid, DomainSpec, ManifoldModel};
use crate::error::{param, Result};
use crate::fields::DriftField;

/// Default grid density for curvature and drift scans, points per unit length.
pub const DEFAULT_RESOLUTION: f64 = 40.0;

/// Minimum number of sample points used when a bound needs a grid scan.
pub const MIN_SAMPLES: usize = 1000;

/// Ricci and Bakry–Émery deficiencies and drift size over a domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBounds {
    /// `max(0, −inf Ric(v,v))` over unit vectors on `D`.
    pub k0_minus: f64,
    /// `max(0, −inf (Ric − 2∇Z)(v,v))` over unit vectors on `D`.
    pub kz_minus: f64,
    /// `sup_D |Z|`.
    pub sup_z: f64,
    /// Grid points scanned; zero when everything is in closed form.
    pub samples: usize,
}

impl CurvatureBounds {
    pub fn zero() -> Self {
        CurvatureBounds {
            k0_minus: 0.0,
            kz_minus: 0.0,
            sup_z: 0.0,
            samples: 0,
        }
    }
}

/// Curvature bounds of `dom` with the default grid resolution.
pub fn domain_bounds(model: &ManifoldModel, dom: &DomainSpec, drift: &DriftField) -> Result<CurvatureBounds> {
    domain_bounds_with(model, dom, drift, DEFAULT_RESOLUTION)
}

/// Closed form for `Z = 0`. For other drifts the infimum of `Ric − 2∇Z` is the
/// exact per-point minimum eigenvalue, minimized over a geodesic grid of at
/// least [`MIN_SAMPLES`] points with `resolution` points per unit length
/// (refined until the sample count is reached). Grid values are raw extrema.
pub fn domain_bounds_with(
    model: &ManifoldModel,
    dom: &DomainSpec,
    drift: &DriftField,
    resolution: f64,
) -> Result<CurvatureBounds> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(param("resolution", format!("must be positive, got {resolution}")));
    }
    let n = model.dim() as f64;
    let ric = (n - 1.0) * model.sectional_curvature();
    let k0_minus = (-ric).max(0.0);
    if drift.is_zero() {
        return Ok(CurvatureBounds {
            k0_minus,
            kz_minus: k0_minus,
            sup_z: 0.0,
            samples: 0,
        });
    }
    let mut spacing = 1.0 / resolution;
    let grid = loop {
        let g = BallGrid::new(model, dom.center(), dom.outer_radius(), spacing)?;
        if g.len() >= MIN_SAMPLES {
            break g;
        }
        spacing /= 2.0;
    };
    let mut inf_ricz = f64::INFINITY;
    let mut sup_z: f64 = 0.0;
    for p in grid.points() {
        let m = drift.covariant_derivative(p);
        // In a conformal chart the g-symmetric part of ∇Z in an orthonormal
        // frame has the same eigenvalues as the chart matrix's symmetric part.
        let sym = (&m + m.transpose()) * 0.5;
        let top = SymmetricEigen::new(sym).eigenvalues.max();
        inf_ricz = inf_ricz.min(ric - 2.0 * top);
        sup_z = sup_z.max(model.norm(p, &drift.value(p)));
    }
    Ok(CurvatureBounds {
        k0_minus,
        kz_minus: (-inf_ricz).max(0.0),
        sup_z,
        samples: grid.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use approx::assert_relative_eq;

    #[test]
    fn constant_curvature_closed_forms() {
        let s = ManifoldModel::unit_sphere(2);
        let d = DomainSpec::new(&s, Point::from_slice(&[0.0, 0.0]), 1.0, 0.5).unwrap();
        let b = domain_bounds(&s, &d, &DriftField::zero(&s)).unwrap();
        assert_eq!((b.k0_minus, b.kz_minus, b.sup_z), (0.0, 0.0, 0.0));

        let h = ManifoldModel::hyperbolic(2, 1.0).unwrap();
        let d = DomainSpec::new(&h, Point::from_slice(&[0.0, 0.0]), 1.0, 0.5).unwrap();
        let b = domain_bounds(&h, &d, &DriftField::zero(&h)).unwrap();
        assert_eq!((b.k0_minus, b.kz_minus), (1.0, 1.0));
    }

    #[test]
    fn ornstein_uhlenbeck_bounds() {
        let e = ManifoldModel::euclidean(2);
        let d = DomainSpec::new(&e, Point::from_slice(&[0.0, 0.0]), 1.5, 0.5).unwrap();
        let b = domain_bounds(&e, &d, &DriftField::builtin(&e, "ou").unwrap()).unwrap();
        assert_eq!(b.k0_minus, 0.0);
        assert_eq!(b.kz_minus, 0.0);
        assert_relative_eq!(b.sup_z, 1.5, epsilon = 1e-12);
        assert!(b.samples >= MIN_SAMPLES);
    }

    #[test]
    fn height_drift_lowers_bakry_emery_curvature_near_south() {
        let s = ManifoldModel::unit_sphere(2);
        let south = s.sphere_point_polar(std::f64::consts::PI, 0.0).unwrap();
        let d = DomainSpec::new(&s, south, 0.5, 0.25).unwrap();
        let b = domain_bounds(&s, &d, &DriftField::builtin(&s, "height_gradient").unwrap()).unwrap();
        // Ric^Z = 1 + 2εF with F = −1 at the south pole and ε = 1/2
        assert!(b.kz_minus.abs() < 1e-12);
        assert!(b.sup_z > 0.0 && b.sup_z <= 0.5 * 0.5f64.sin() + 1e-12);
    }
}
