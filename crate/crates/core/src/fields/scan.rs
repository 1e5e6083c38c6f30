use serde::{Deserialize, Serialize};

use crate::geometry::{BallGrid, Point};

/// Grid estimate of `sup |f|` over a ball.
///
/// `slack` is the local Lipschitz estimate (largest difference quotient over
/// lattice neighbours) times the covering radius of the grid, so the true
/// supremum is expected below `value + slack`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupNorm {
    pub value: f64,
    pub lipschitz: f64,
    pub slack: f64,
    pub spacing: f64,
    pub samples: usize,
}

impl SupNorm {
    pub fn upper(&self) -> f64 {
        self.value + self.slack
    }
}

/// Scans a non-negative quantity `f` over every grid point.
pub fn scan_sup(grid: &BallGrid, f: impl Fn(&Point) -> f64) -> SupNorm {
    let values: Vec<f64> = grid.points().iter().map(|p| f(p).abs()).collect();
    let value = values.iter().cloned().fold(0.0, f64::max);
    let lipschitz = grid
        .neighbour_pairs()
        .iter()
        .filter(|(_, _, d)| *d > 0.0)
        .map(|&(a, b, d)| (values[a] - values[b]).abs() / d)
        .fold(0.0, f64::max);
    SupNorm {
        value,
        lipschitz,
        slack: lipschitz * grid.covering_radius(),
        spacing: grid.spacing(),
        samples: values.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::TestField;
    use crate::geometry::ManifoldModel;
    use approx::assert_relative_eq;

    #[test]
    fn sup_of_linear_function_on_disc() {
        let e = ManifoldModel::euclidean(2);
        let grid = BallGrid::new(&e, &Point::from_slice(&[0.0, 0.0]), 2.0, 1.0 / 40.0).unwrap();
        let u = TestField::builtin(&e, "x1").unwrap();
        let s = scan_sup(&grid, |p| u.value(p));
        assert_relative_eq!(s.value, 2.0, epsilon = 1e-12);
        assert_relative_eq!(s.lipschitz, 1.0, epsilon = 1e-9);
        assert!(s.slack < 0.05);
    }

    #[test]
    fn eigenfunction_sup_matches_closed_form() {
        let s2 = ManifoldModel::unit_sphere(2);
        let center = Point::from_slice(&[1.0, 0.0]);
        let grid = BallGrid::new(&s2, &center, 1.0, 1.0 / 40.0).unwrap();
        let u = TestField::builtin(&s2, "cos_theta").unwrap();
        let s = scan_sup(&grid, |p| u.value(p));
        // |cos θ| on a cap of radius 1 around an equator point peaks at sin(1)
        assert!((s.value - 1.0f64.sin()).abs() <= s.slack + 1e-12);
    }
}
