use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{fd_covariant_hessian, fd_gradient, height, chart_sign, sample_points, DriftField, SELF_CHECK_POINTS};
use crate::error::{nearest, param, Error, Result};
use crate::geometry::{Chart, ManifoldModel, ModelKind, Point};

#[derive(Debug, Clone, PartialEq)]
enum Profile {
    Identity,
    /// Degree-two zonal harmonic `((n+1)z² − 1)/n`.
    Zonal2,
    /// `z⁻²`, i.e. `sech²` of the scaled distance on hyperbolic space.
    InverseSquare,
}

impl Profile {
    /// `(G, G', G'')` at `z`.
    fn eval(&self, n: f64, z: f64) -> (f64, f64, f64) {
        match self {
            Profile::Identity => (z, 1.0, 0.0),
            Profile::Zonal2 => (((n + 1.0) * z * z - 1.0) / n, 2.0 * (n + 1.0) * z / n, 2.0 * (n + 1.0) / n),
            Profile::InverseSquare => {
                let w = 1.0 / (z * z);
                (w, -2.0 * w / z, 6.0 * w * w)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Formula {
    Constant(f64),
    Coordinate(usize),
    Product(usize, usize),
    DiffSquares,
    NormSquared,
    /// `sin(k·y + phase)`.
    Wave { k: Vec<f64>, phase: f64 },
    /// `G(F)` of the normalized height `F` on a curved model.
    Zonal(Profile),
}

/// A scalar test function with analytic value, differential, Hessian and Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct TestField {
    name: String,
    model: ManifoldModel,
    formula: Formula,
    eigenvalue: Option<f64>,
}

const EUCLIDEAN_NAMES: &[&str] = &["x1", "x1x2", "x1sq_minus_x2sq", "norm_sq", "one"];
const SPHERE_NAMES: &[&str] = &["cos_theta", "zonal2", "one"];
const HYPERBOLIC_NAMES: &[&str] = &["cosh_r", "sech2_r", "one"];
const TORUS_NAMES: &[&str] = &["sin_x1", "cos_x2", "sin_x1_plus_x2", "one"];

pub fn function_names(model: &ManifoldModel) -> &'static [&'static str] {
    match model.kind() {
        ModelKind::Euclidean => EUCLIDEAN_NAMES,
        ModelKind::Sphere { .. } => SPHERE_NAMES,
        ModelKind::Hyperbolic { .. } => HYPERBOLIC_NAMES,
        ModelKind::FlatTorus { .. } => TORUS_NAMES,
    }
}

fn needs_two(model: &ManifoldModel, name: &str) -> Result<()> {
    if model.dim() < 2 {
        return Err(param("dim", format!("function `{name}` needs dimension at least 2")));
    }
    Ok(())
}

impl TestField {
    /// Looks up a catalog function and runs its finite-difference self-check.
    pub fn builtin(model: &ManifoldModel, name: &str) -> Result<Self> {
        Self::builtin_with(model, name, true)
    }

    pub fn builtin_with(model: &ManifoldModel, name: &str, self_check: bool) -> Result<Self> {
        let n = model.dim() as f64;
        let k = model.sectional_curvature();
        let (formula, eigenvalue) = match (model.kind(), name) {
            (_, "one") => (Formula::Constant(1.0), Some(0.0)),
            (ModelKind::Euclidean, "x1") => (Formula::Coordinate(0), None),
            (ModelKind::Euclidean, "x1x2") => {
                needs_two(model, name)?;
                (Formula::Product(0, 1), None)
            }
            (ModelKind::Euclidean, "x1sq_minus_x2sq") => {
                needs_two(model, name)?;
                (Formula::DiffSquares, None)
            }
            (ModelKind::Euclidean, "norm_sq") => (Formula::NormSquared, None),
            (ModelKind::FlatTorus { periods }, "sin_x1" | "cos_x2" | "sin_x1_plus_x2") => {
                if name != "sin_x1" {
                    needs_two(model, name)?;
                }
                let omega: Vec<f64> = periods.iter().map(|l| 2.0 * std::f64::consts::PI / l).collect();
                let mut kv = vec![0.0; periods.len()];
                let mut phase = 0.0;
                match name {
                    "sin_x1" => kv[0] = omega[0],
                    "cos_x2" => {
                        kv[1] = omega[1];
                        phase = std::f64::consts::FRAC_PI_2;
                    }
                    _ => {
                        kv[0] = omega[0];
                        kv[1] = omega[1];
                    }
                }
                let lambda = kv.iter().map(|w| w * w).sum();
                (Formula::Wave { k: kv, phase }, Some(lambda))
            }
            (ModelKind::Sphere { .. }, "cos_theta") | (ModelKind::Hyperbolic { .. }, "cosh_r") => {
                (Formula::Zonal(Profile::Identity), Some(n * k))
            }
            (ModelKind::Sphere { .. }, "zonal2") => (Formula::Zonal(Profile::Zonal2), Some(2.0 * (n + 1.0) * k)),
            (ModelKind::Hyperbolic { .. }, "sech2_r") => (Formula::Zonal(Profile::InverseSquare), None),
            _ => {
                return Err(Error::Catalog {
                    kind: "function",
                    name: name.into(),
                    model: model.name(),
                    suggestion: nearest(name, function_names(model).iter().copied()),
                })
            }
        };
        let field = TestField {
            name: name.into(),
            model: model.clone(),
            formula,
            eigenvalue,
        };
        if self_check {
            field.self_check()?;
        }
        Ok(field)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn model(&self) -> &ManifoldModel {
        &self.model
    }

    /// `λ` with `Δu = −λu`, when `u` is an eigenfunction.
    pub fn eigenvalue(&self) -> Option<f64> {
        self.eigenvalue
    }

    pub fn value(&self, p: &Point) -> f64 {
        self.value_raw(p.coords.as_slice(), p.chart)
    }

    pub(crate) fn value_raw(&self, y: &[f64], chart: Chart) -> f64 {
        match &self.formula {
            Formula::Constant(c) => *c,
            Formula::Coordinate(i) => y[*i],
            Formula::Product(i, j) => y[*i] * y[*j],
            Formula::DiffSquares => y[0] * y[0] - y[1] * y[1],
            Formula::NormSquared => y.iter().map(|c| c * c).sum(),
            Formula::Wave { k, phase } => (dot(k, y) + phase).sin(),
            Formula::Zonal(g) => {
                let n = self.model.dim() as f64;
                g.eval(n, height(self.model.sectional_curvature(), y, chart)).0
            }
        }
    }

    /// Chart components of `du`.
    pub fn differential(&self, p: &Point) -> DVector<f64> {
        let n = self.model.dim();
        let y = &p.coords;
        match &self.formula {
            Formula::Constant(_) => DVector::zeros(n),
            Formula::Coordinate(i) => unit(n, *i),
            Formula::Product(i, j) => {
                let mut d = DVector::zeros(n);
                d[*i] += y[*j];
                d[*j] += y[*i];
                d
            }
            Formula::DiffSquares => {
                let mut d = DVector::zeros(n);
                d[0] = 2.0 * y[0];
                d[1] = -2.0 * y[1];
                d
            }
            Formula::NormSquared => y * 2.0,
            Formula::Wave { k, phase } => {
                let c = (dot(k, y.as_slice()) + phase).cos();
                DVector::from_iterator(n, k.iter().map(|w| w * c))
            }
            Formula::Zonal(g) => {
                let (f, df) = self.height_and_differential(p);
                df * g.eval(n as f64, f).1
            }
        }
    }

    fn height_and_differential(&self, p: &Point) -> (f64, DVector<f64>) {
        let k = self.model.sectional_curvature();
        let s = k * p.coords.norm_squared();
        let f = height(k, p.coords.as_slice(), p.chart);
        let df = &p.coords * (-4.0 * chart_sign(p.chart) * k / ((1.0 + s) * (1.0 + s)));
        (f, df)
    }

    /// Covariant Hessian in chart components.
    pub fn hessian(&self, p: &Point) -> DMatrix<f64> {
        let n = self.model.dim();
        let y = &p.coords;
        match &self.formula {
            Formula::Constant(_) | Formula::Coordinate(_) => DMatrix::zeros(n, n),
            Formula::Product(i, j) => {
                let mut h = DMatrix::zeros(n, n);
                h[(*i, *j)] += 1.0;
                h[(*j, *i)] += 1.0;
                h
            }
            Formula::DiffSquares => {
                let mut h = DMatrix::zeros(n, n);
                h[(0, 0)] = 2.0;
                h[(1, 1)] = -2.0;
                h
            }
            Formula::NormSquared => DMatrix::identity(n, n) * 2.0,
            Formula::Wave { k, phase } => {
                let s = (dot(k, y.as_slice()) + phase).sin();
                DMatrix::from_fn(n, n, |a, b| -k[a] * k[b] * s)
            }
            Formula::Zonal(g) => {
                // Hess F = −K F g, g = λ² δ
                let kk = self.model.sectional_curvature();
                let (f, df) = self.height_and_differential(p);
                let (_, g1, g2) = g.eval(n as f64, f);
                let l = self.model.conformal_factor(p);
                &df * df.transpose() * g2 - DMatrix::identity(n, n) * (g1 * kk * f * l * l)
            }
        }
    }

    pub fn laplacian(&self, p: &Point) -> f64 {
        self.laplacian_raw(p.coords.as_slice(), p.chart)
    }

    pub(crate) fn laplacian_raw(&self, y: &[f64], chart: Chart) -> f64 {
        let n = self.model.dim() as f64;
        match &self.formula {
            Formula::Constant(_) | Formula::Coordinate(_) | Formula::Product(..) | Formula::DiffSquares => 0.0,
            Formula::NormSquared => 2.0 * n,
            Formula::Wave { k, phase } => -dot(k, k) * (dot(k, y) + phase).sin(),
            Formula::Zonal(g) => {
                // |dF|²_g = K (1 − F²)
                let kk = self.model.sectional_curvature();
                let f = height(kk, y, chart);
                let (_, g1, g2) = g.eval(n, f);
                g2 * kk * (1.0 - f * f) - g1 * n * kk * f
            }
        }
    }

    /// `2Lu = Δu + 2 du(Z)`.
    pub fn generator2(&self, p: &Point, drift: &DriftField) -> f64 {
        let lap = self.laplacian(p);
        if drift.is_zero() {
            lap
        } else {
            lap + 2.0 * self.differential(p).dot(&drift.value(p))
        }
    }

    /// `|du|_g`.
    pub fn differential_norm(&self, p: &Point) -> f64 {
        self.model.covector_norm(p, &self.differential(p))
    }

    /// Operator norm of `Hess u` with respect to `g`.
    pub fn hessian_norm(&self, p: &Point) -> f64 {
        let l = self.model.conformal_factor(p);
        let h = self.hessian(p) / (l * l);
        SymmetricEigen::new(h).eigenvalues.amax()
    }

    fn self_check(&self) -> Result<()> {
        let model = &self.model;
        for p in sample_points(model, SELF_CHECK_POINTS, 0xF1E1D) {
            let f = |q: &Point| self.value(q);
            let du = self.differential(&p);
            let fd = fd_gradient(&p, 1e-5, f);
            let err = (&du - &fd).amax();
            if err > 1e-6 * (1.0 + du.amax()) {
                return Err(self.mismatch("differential", err));
            }
            let hess = self.hessian(&p);
            let fd_hess = fd_covariant_hessian(model, &p, f);
            let err = (&hess - &fd_hess).amax();
            if err > 1e-4 * (1.0 + hess.amax()) {
                return Err(self.mismatch("Hessian", err));
            }
            let l = model.conformal_factor(&p);
            let lap = self.laplacian(&p);
            let err = (lap - fd_hess.trace() / (l * l)).abs();
            if err > 1e-4 * (1.0 + lap.abs()) {
                return Err(self.mismatch("Laplacian", err));
            }
            if let Some(lambda) = self.eigenvalue {
                let u = self.value(&p);
                let err = (lap + lambda * u).abs();
                if err > 1e-10 * (1.0 + lap.abs()) {
                    return Err(self.mismatch("eigenvalue relation", err));
                }
            }
        }
        Ok(())
    }

    fn mismatch(&self, what: &str, err: f64) -> Error {
        Error::Consistency(format!(
            "function `{}` on {}: {what} disagrees with finite differences by {err:e}",
            self.name,
            self.model.name()
        ))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}
