//! Geodesic grids on balls.
//!
//! A [`BallGrid`] is the image under `exp_{x₀}` of a Cartesian lattice in an
//! orthonormal frame at `x₀`, restricted to the tangent ball of radius `R`.
//! In dimension one and two, samples on the boundary sphere are added. Lattice
//! neighbours are recorded with their geodesic distance so that scans can
//! estimate local Lipschitz constants.

use nalgebra::{DMatrix, DVector};

use super::model::{ManifoldModel, ModelKind, Point};
use crate::error::{param, Result};

#[derive(Debug, Clone)]
pub struct BallGrid {
    points: Vec<Point>,
    pairs: Vec<(usize, usize, f64)>,
    spacing: f64,
    covering_radius: f64,
    radius: f64,
}

impl BallGrid {
    /// Grid over the closed ball `B(center, radius)` with tangent lattice spacing `spacing`.
    pub fn new(model: &ManifoldModel, center: &Point, radius: f64, spacing: f64) -> Result<Self> {
        model.check_point(center)?;
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(param("radius", format!("must be non-negative, got {radius}")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(param("spacing", format!("must be positive, got {spacing}")));
        }
        let n = model.dim();
        let frame = model.orthonormal_frame(center);
        let empty = DMatrix::zeros(n, 0);
        let m = (radius / spacing + 1e-9).floor() as i64;
        let side = (2 * m + 1) as usize;
        let total = side.checked_pow(n as u32).filter(|t| *t <= 50_000_000);
        let total = total.ok_or_else(|| param("spacing", "grid too fine for this dimension and radius"))?;

        let mut index = vec![usize::MAX; total];
        let mut points = Vec::new();
        let mut tangent = Vec::new();
        let mut digits = vec![0i64; n];
        for flat in 0..total {
            let mut rest = flat;
            for d in digits.iter_mut() {
                *d = (rest % side) as i64 - m;
                rest /= side;
            }
            let v = DVector::from_iterator(n, digits.iter().map(|d| *d as f64 * spacing));
            if v.norm() <= radius * (1.0 + 1e-12) {
                index[flat] = points.len();
                let chart_v = &frame * &v;
                let (p, _) = model.exp_closed_form_unchecked(center, &chart_v, &empty);
                points.push(p);
                tangent.push(flat);
            }
        }

        let mut pairs = Vec::new();
        for &flat in &tangent {
            let mut stride = 1usize;
            let mut rest = flat;
            for _ in 0..n {
                let digit = rest % side;
                rest /= side;
                if digit + 1 < side {
                    let other = index[flat + stride];
                    if other != usize::MAX {
                        let a = index[flat];
                        let d = model.distance_unchecked(&points[a], &points[other]);
                        pairs.push((a, other, d));
                    }
                }
                stride *= side;
            }
        }

        if radius > 0.0 && n <= 2 {
            let dirs: Vec<DVector<f64>> = if n == 1 {
                vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)]
            } else {
                let count = ((2.0 * std::f64::consts::PI * radius / spacing).ceil() as usize).max(8);
                (0..count)
                    .map(|i| {
                        let a = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                        DVector::from_column_slice(&[a.cos(), a.sin()])
                    })
                    .collect()
            };
            for dir in dirs {
                let chart_v = &frame * (dir * radius);
                let (p, _) = model.exp_closed_form_unchecked(center, &chart_v, &empty);
                points.push(p);
            }
        }

        // Every point of the tangent ball is within h·√n of a sample; the
        // exponential map stretches tangent distances by at most `distortion`.
        let distortion = match model.kind() {
            ModelKind::Hyperbolic { curvature } => {
                let x = curvature.sqrt() * radius;
                if x > 0.0 {
                    x.sinh() / x
                } else {
                    1.0
                }
            }
            _ => 1.0,
        };
        let covering_radius = spacing * (n as f64).sqrt() * distortion;
        Ok(BallGrid {
            points,
            pairs,
            spacing,
            covering_radius,
            radius,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Lattice neighbour pairs `(i, j, ρ(p_i, p_j))`.
    pub fn neighbour_pairs(&self) -> &[(usize, usize, f64)] {
        &self.pairs
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Upper bound on the distance from any point of the ball to the nearest sample.
    pub fn covering_radius(&self) -> f64 {
        self.covering_radius
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}
