use nalgebra::{DMatrix, DVector};

use super::{fd_gradient, fd_second_partials, sample_points, SELF_CHECK_POINTS};
use crate::error::{nearest, Error, Result};
use crate::geometry::{ManifoldModel, ModelKind, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Profile {
    One,
    /// `sin(ω_i y_i)`.
    Sin(usize),
    /// `cos(ω_i y_i)`.
    Cos(usize),
}

/// A one-form `α = a(y) dx_j` on a flat torus, with exterior derivative,
/// codifferential and Hodge Laplacian in closed form.
///
/// Conventions: `δ = −div`, `Δ = −(dδ + δd)` so that eigenforms satisfy
/// `Δα = −λα` with `λ ≥ 0`, and `|dα|² = Σ_{i<j} (dα)_ij²`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormField {
    name: String,
    model: ManifoldModel,
    component: usize,
    profile: Profile,
    omega: Vec<f64>,
    eigenvalue: Option<f64>,
}

const TORUS_NAMES: &[&str] = &["dx1", "sinx1_dx2", "cosx2_dx1", "sinx1_dx1"];

pub fn oneform_names(model: &ManifoldModel) -> &'static [&'static str] {
    match model.kind() {
        ModelKind::FlatTorus { .. } if model.dim() >= 2 => TORUS_NAMES,
        _ => &[],
    }
}

impl OneFormField {
    pub fn builtin(model: &ManifoldModel, name: &str) -> Result<Self> {
        Self::builtin_with(model, name, true)
    }

    pub fn builtin_with(model: &ManifoldModel, name: &str, self_check: bool) -> Result<Self> {
        let names = oneform_names(model);
        let catalog_error = || Error::Catalog {
            kind: "one-form",
            name: name.into(),
            model: model.name(),
            suggestion: nearest(name, names.iter().copied()),
        };
        let periods = match model.kind() {
            ModelKind::FlatTorus { periods } if model.dim() >= 2 => periods,
            _ => return Err(catalog_error()),
        };
        let (component, profile) = match name {
            "dx1" => (0, Profile::One),
            "sinx1_dx2" => (1, Profile::Sin(0)),
            "cosx2_dx1" => (0, Profile::Cos(1)),
            "sinx1_dx1" => (0, Profile::Sin(0)),
            _ => return Err(catalog_error()),
        };
        let omega: Vec<f64> = periods.iter().map(|l| 2.0 * std::f64::consts::PI / l).collect();
        let eigenvalue = Some(match profile {
            Profile::One => 0.0,
            Profile::Sin(i) | Profile::Cos(i) => omega[i] * omega[i],
        });
        let form = OneFormField {
            name: name.into(),
            model: model.clone(),
            component,
            profile,
            omega,
            eigenvalue,
        };
        if self_check {
            form.self_check()?;
        }
        Ok(form)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    pub fn eigenvalue(&self) -> Option<f64> {
        self.eigenvalue
    }

    /// `(a, ∂a/∂y_i, i)` for the coefficient function; `i` is `None` for constants.
    fn coefficient(&self, p: &Point) -> (f64, f64, Option<usize>) {
        match self.profile {
            Profile::One => (1.0, 0.0, None),
            Profile::Sin(i) => {
                let w = self.omega[i];
                ((w * p.coords[i]).sin(), w * (w * p.coords[i]).cos(), Some(i))
            }
            Profile::Cos(i) => {
                let w = self.omega[i];
                ((w * p.coords[i]).cos(), -w * (w * p.coords[i]).sin(), Some(i))
            }
        }
    }

    /// Components `α_j`.
    pub fn value(&self, p: &Point) -> DVector<f64> {
        let mut a = DVector::zeros(self.model.dim());
        a[self.component] = self.coefficient(p).0;
        a
    }

    /// Antisymmetric matrix `(dα)_ij = ∂_i α_j − ∂_j α_i`.
    pub fn exterior_derivative(&self, p: &Point) -> DMatrix<f64> {
        let n = self.model.dim();
        let mut f = DMatrix::zeros(n, n);
        if let (_, da, Some(i)) = self.coefficient(p) {
            let j = self.component;
            if i != j {
                f[(i, j)] = da;
                f[(j, i)] = -da;
            }
        }
        f
    }

    /// `δα = −Σ_j ∂_j α_j`.
    pub fn codifferential(&self, p: &Point) -> f64 {
        match self.coefficient(p) {
            (_, da, Some(i)) if i == self.component => -da,
            _ => 0.0,
        }
    }

    /// Components of `Δα`; on a flat torus `(Δα)_j = Δ(α_j)`.
    pub fn hodge_laplacian(&self, p: &Point) -> DVector<f64> {
        let (a, _, i) = self.coefficient(p);
        let mut out = DVector::zeros(self.model.dim());
        if let Some(i) = i {
            out[self.component] = -self.omega[i] * self.omega[i] * a;
        }
        out
    }

    pub fn norm(&self, p: &Point) -> f64 {
        self.value(p).norm()
    }

    pub fn exterior_derivative_norm(&self, p: &Point) -> f64 {
        // Frobenius norm counts each pair i<j twice.
        self.exterior_derivative(p).norm() / std::f64::consts::SQRT_2
    }

    pub fn codifferential_norm(&self, p: &Point) -> f64 {
        self.codifferential(p).abs()
    }

    pub fn hodge_laplacian_norm(&self, p: &Point) -> f64 {
        self.hodge_laplacian(p).norm()
    }

    fn self_check(&self) -> Result<()> {
        let n = self.model.dim();
        for p in sample_points(&self.model, SELF_CHECK_POINTS, 0x0F0E) {
            let jac: Vec<DVector<f64>> = (0..n).map(|j| fd_gradient(&p, 1e-5, |q| self.value(q)[j])).collect();
            let d = self.exterior_derivative(&p);
            let mut first: f64 = 0.0;
            let mut div = 0.0;
            for i in 0..n {
                div += jac[i][i];
                for j in 0..n {
                    first = first.max((d[(i, j)] - (jac[j][i] - jac[i][j])).abs());
                }
            }
            first = first.max((self.codifferential(&p) + div).abs());
            let lap = self.hodge_laplacian(&p);
            let second = (0..n)
                .map(|j| (lap[j] - fd_second_partials(&p, 1e-4, |q| self.value(q)[j]).trace()).abs())
                .fold(0.0, f64::max);
            let eigen = match self.eigenvalue {
                Some(lambda) => (&lap + self.value(&p) * lambda).amax(),
                None => 0.0,
            };
            if first > 1e-6 || second > 1e-4 || eigen > 1e-10 {
                return Err(Error::Consistency(format!(
                    "one-form `{}` fails its finite-difference self-check \
                     (first order {first:e}, second order {second:e}, eigen relation {eigen:e})",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn torus() -> ManifoldModel {
        ManifoldModel::flat_torus(vec![2.0 * PI, 2.0 * PI]).unwrap()
    }

    #[test]
    fn sin_x1_dx2_is_coclosed_eigenform() {
        let a = OneFormField::builtin(&torus(), "sinx1_dx2").unwrap();
        let p = Point::from_slice(&[0.7, 2.0]);
        assert_eq!(a.eigenvalue(), Some(1.0));
        assert_relative_eq!(a.exterior_derivative(&p)[(0, 1)], 0.7f64.cos());
        assert_eq!(a.codifferential(&p), 0.0);
        assert_relative_eq!((a.hodge_laplacian(&p) + a.value(&p)).amax(), 0.0);
        assert_relative_eq!(a.exterior_derivative_norm(&p), 0.7f64.cos().abs(), epsilon = 1e-15);
    }

    #[test]
    fn dx1_is_harmonic() {
        let a = OneFormField::builtin(&torus(), "dx1").unwrap();
        let p = Point::from_slice(&[0.1, 0.2]);
        assert_eq!(a.exterior_derivative_norm(&p), 0.0);
        assert_eq!(a.codifferential(&p), 0.0);
        assert_eq!(a.hodge_laplacian_norm(&p), 0.0);
    }

    #[test]
    fn closed_but_not_coclosed_form() {
        let a = OneFormField::builtin(&torus(), "sinx1_dx1").unwrap();
        let p = Point::from_slice(&[0.3, 0.2]);
        assert_eq!(a.exterior_derivative_norm(&p), 0.0);
        assert_relative_eq!(a.codifferential(&p), -(0.3f64).cos());
    }

    #[test]
    fn cos_x2_dx1_sup_norm() {
        let a = OneFormField::builtin(&torus(), "cosx2_dx1").unwrap();
        assert_relative_eq!(a.norm(&Point::from_slice(&[1.0, 0.0])), 1.0);
    }

    #[test]
    fn unsupported_model_is_catalog_error() {
        let err = OneFormField::builtin(&ManifoldModel::unit_sphere(2), "dx1").unwrap_err();
        assert!(matches!(err, Error::Catalog { .. }));
    }
}
