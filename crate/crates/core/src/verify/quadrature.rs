//! Tensor-grid quadrature on the closed models.
//!
//! The flat torus uses the periodic trapezoid rule with `m` nodes per axis.
//! The 2-sphere uses polar coordinates: midpoint nodes in `θ` (`m` of them)
//! and periodic nodes in `φ` (`2m`), with weight `a² sin θ dθ dφ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::fields::TestField;
use crate::geometry::{ManifoldModel, ModelKind, Point};

pub(crate) struct TensorGrid {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Nodes per axis; the last axis varies fastest.
    pub shape: Vec<usize>,
}

impl TensorGrid {
    pub fn new(model: &ManifoldModel, m: usize) -> Result<Self> {
        if m < 4 {
            return Err(param("points", format!("need at least 4 nodes per axis, got {m}")));
        }
        match model.kind() {
            ModelKind::FlatTorus { periods } => {
                let n = periods.len();
                let total = m.checked_pow(n as u32).filter(|t| *t <= 4_000_000);
                let total = total.ok_or_else(|| param("points", "quadrature grid too large"))?;
                let w: f64 = periods.iter().map(|l| l / m as f64).product();
                let mut points = Vec::with_capacity(total);
                for flat in 0..total {
                    let mut rest = flat;
                    let mut c = vec![0.0; n];
                    for axis in (0..n).rev() {
                        c[axis] = periods[axis] * (rest % m) as f64 / m as f64;
                        rest /= m;
                    }
                    points.push(Point::from_slice(&c));
                }
                Ok(TensorGrid {
                    points,
                    weights: vec![w; total],
                    shape: vec![m; n],
                })
            }
            ModelKind::Sphere { radius } if model.dim() == 2 => {
                let (dt, dp) = (PI / m as f64, PI / m as f64);
                let mut points = Vec::with_capacity(2 * m * m);
                let mut weights = Vec::with_capacity(2 * m * m);
                for i in 0..m {
                    let theta = (i as f64 + 0.5) * dt;
                    for j in 0..2 * m {
                        points.push(model.sphere_point_polar(theta, j as f64 * dp)?);
                        weights.push(radius * radius * theta.sin() * dt * dp);
                    }
                }
                Ok(TensorGrid {
                    points,
                    weights,
                    shape: vec![m, 2 * m],
                })
            }
            ModelKind::Sphere { .. } => Err(param("dim", "sphere quadrature is implemented for n = 2")),
            _ => Err(Error::Domain(format!(
                "global quadrature needs a closed model, got {}",
                model.name()
            ))),
        }
    }

    /// `(Σ w |f|^p)^{1/p}`.
    pub fn lp_norm(&self, p: f64, values: &[f64]) -> f64 {
        let s: f64 = self.weights.iter().zip(values).map(|(w, v)| w * v.abs().powf(p)).sum();
        s.powf(1.0 / p)
    }

    /// Largest change of `values` between adjacent nodes along any axis.
    pub fn max_jump(&self, values: &[f64]) -> f64 {
        let mut stride = 1;
        let mut jump: f64 = 0.0;
        for &len in self.shape.iter().rev() {
            for (flat, v) in values.iter().enumerate() {
                let digit = (flat / stride) % len;
                if digit + 1 < len {
                    jump = jump.max((values[flat + stride] - v).abs());
                }
            }
            stride *= len;
        }
        jump
    }
}

/// `‖du‖_p`, `‖u‖_p` and `‖Δu‖_p` on a closed model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpNorms {
    pub p: f64,
    pub du: f64,
    pub u: f64,
    pub laplacian: f64,
    /// Nodes per axis.
    pub points: usize,
}

pub fn lp_norms(model: &ManifoldModel, u: &TestField, p: f64, points: usize) -> Result<LpNorms> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(param("p", format!("must be at least 1, got {p}")));
    }
    let grid = TensorGrid::new(model, points)?;
    let du: Vec<f64> = grid.points.iter().map(|x| u.differential_norm(x)).collect();
    let val: Vec<f64> = grid.points.iter().map(|x| u.value(x)).collect();
    let lap: Vec<f64> = grid.points.iter().map(|x| u.laplacian(x)).collect();
    Ok(LpNorms {
        p,
        du: grid.lp_norm(p, &du),
        u: grid.lp_norm(p, &val),
        laplacian: grid.lp_norm(p, &lap),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn torus_sine_norms_are_exact() {
        let t = ManifoldModel::flat_torus(vec![2.0 * PI, 2.0 * PI]).unwrap();
        let u = TestField::builtin(&t, "sin_x1").unwrap();
        let n = lp_norms(&t, &u, 2.0, 32).unwrap();
        let exact = (2.0 * PI * PI).sqrt();
        assert_relative_eq!(n.u, exact, max_relative = 1e-12);
        assert_relative_eq!(n.du, exact, max_relative = 1e-12);
        assert_relative_eq!(n.laplacian, exact, max_relative = 1e-12);
    }

    #[test]
    fn sphere_area_and_cos_theta_norms() {
        let s = ManifoldModel::unit_sphere(2);
        let one = TestField::builtin(&s, "one").unwrap();
        let g = TensorGrid::new(&s, 200).unwrap();
        assert_relative_eq!(g.weights.iter().sum::<f64>(), 4.0 * PI, max_relative = 1e-4);
        let u = TestField::builtin(&s, "cos_theta").unwrap();
        let n = lp_norms(&s, &u, 2.0, 200).unwrap();
        // ∫cos²θ = 4π/3, ∫sin²θ = 8π/3
        assert_relative_eq!(n.u, (4.0 * PI / 3.0).sqrt(), max_relative = 1e-4);
        assert_relative_eq!(n.du, (8.0 * PI / 3.0).sqrt(), max_relative = 1e-4);
        assert_relative_eq!(n.laplacian, 2.0 * (4.0 * PI / 3.0).sqrt(), max_relative = 1e-4);
        assert_eq!(lp_norms(&s, &one, 2.0, 16).unwrap().du, 0.0);
    }

    #[test]
    fn open_models_are_rejected() {
        let e = ManifoldModel::euclidean(2);
        assert!(matches!(TensorGrid::new(&e, 16), Err(Error::Domain(_))));
    }
}
