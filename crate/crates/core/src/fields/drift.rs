use nalgebra::{DMatrix, DVector};

use super::{fd_covariant_derivative, sample_points, SELF_CHECK_POINTS};
use crate::error::{nearest, Error, Result};
use crate::geometry::{Chart, ManifoldModel, ModelKind, Point};

/// Height parameter of the `height_gradient` drift.
pub const HEIGHT_DRIFT_SCALE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
enum DriftKind {
    Zero,
    /// `Z = −x` on Euclidean space.
    OrnsteinUhlenbeck,
    /// Parallel field `e₁` on a flat model.
    Constant(usize),
    /// `Z = ε grad F` with `F` the normalized height on a curved model.
    HeightGradient(f64),
}

/// A smooth vector field `Z` with its covariant derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftField {
    name: String,
    model: ManifoldModel,
    kind: DriftKind,
}

const FLAT_NAMES: &[&str] = &["zero", "constant"];
const EUCLIDEAN_NAMES: &[&str] = &["zero", "ou", "constant"];
const CURVED_NAMES: &[&str] = &["zero", "height_gradient"];

pub fn drift_names(model: &ManifoldModel) -> &'static [&'static str] {
    match model.kind() {
        ModelKind::Euclidean => EUCLIDEAN_NAMES,
        ModelKind::FlatTorus { .. } => FLAT_NAMES,
        _ => CURVED_NAMES,
    }
}

impl DriftField {
    pub fn zero(model: &ManifoldModel) -> Self {
        DriftField {
            name: "zero".into(),
            model: model.clone(),
            kind: DriftKind::Zero,
        }
    }

    /// Looks up a catalog drift and runs its finite-difference self-check.
    pub fn builtin(model: &ManifoldModel, name: &str) -> Result<Self> {
        Self::builtin_with(model, name, true)
    }

    pub fn builtin_with(model: &ManifoldModel, name: &str, self_check: bool) -> Result<Self> {
        let names = drift_names(model);
        let kind = match (name, model.kind()) {
            ("zero", _) => DriftKind::Zero,
            ("ou", ModelKind::Euclidean) => DriftKind::OrnsteinUhlenbeck,
            ("constant", ModelKind::Euclidean | ModelKind::FlatTorus { .. }) => DriftKind::Constant(0),
            ("height_gradient", ModelKind::Sphere { .. } | ModelKind::Hyperbolic { .. }) => {
                DriftKind::HeightGradient(HEIGHT_DRIFT_SCALE)
            }
            _ => {
                return Err(Error::Catalog {
                    kind: "drift",
                    name: name.into(),
                    model: model.name(),
                    suggestion: nearest(name, names.iter().copied()),
                })
            }
        };
        let field = DriftField {
            name: name.into(),
            model: model.clone(),
            kind,
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

    pub fn is_zero(&self) -> bool {
        self.kind == DriftKind::Zero
    }

    /// `Z(p)` in chart components.
    pub fn value(&self, p: &Point) -> DVector<f64> {
        let mut out = DVector::zeros(self.model.dim());
        self.value_raw(p.coords.as_slice(), p.chart, out.as_mut_slice());
        out
    }

    /// The endomorphism `v ↦ ∇_v Z` in chart components.
    pub fn covariant_derivative(&self, p: &Point) -> DMatrix<f64> {
        let n = self.model.dim();
        let mut out = DMatrix::zeros(n, n);
        self.derivative_raw(p.coords.as_slice(), p.chart, out.as_mut_slice());
        out
    }

    pub(crate) fn value_raw(&self, y: &[f64], chart: Chart, out: &mut [f64]) {
        match self.kind {
            DriftKind::Zero => out.fill(0.0),
            DriftKind::OrnsteinUhlenbeck => {
                for (o, c) in out.iter_mut().zip(y) {
                    *o = -c;
                }
            }
            DriftKind::Constant(axis) => {
                out.fill(0.0);
                out[axis] = 1.0;
            }
            DriftKind::HeightGradient(eps) => {
                // grad F = g⁻¹ dF = −σ K y in a stereographic chart
                let k = self.model.sectional_curvature();
                let sigma = chart_sign(chart);
                for (o, c) in out.iter_mut().zip(y) {
                    *o = -eps * sigma * k * c;
                }
            }
        }
    }

    /// Column-major `n × n` matrix of `∇Z` written into `out`.
    pub(crate) fn derivative_raw(&self, y: &[f64], chart: Chart, out: &mut [f64]) {
        let n = self.model.dim();
        out.fill(0.0);
        let diag = match self.kind {
            DriftKind::Zero | DriftKind::Constant(_) => return,
            DriftKind::OrnsteinUhlenbeck => -1.0,
            DriftKind::HeightGradient(eps) => {
                // ε Hess F = −ε K F · id
                let k = self.model.sectional_curvature();
                -eps * k * height(k, y, chart)
            }
        };
        for i in 0..n {
            out[i * n + i] = diag;
        }
    }

    fn self_check(&self) -> Result<()> {
        for p in sample_points(&self.model, SELF_CHECK_POINTS, 0xD41F7) {
            let analytic = self.covariant_derivative(&p);
            let numeric = fd_covariant_derivative(&self.model, &p, |q| self.value(q));
            let err = (&analytic - &numeric).amax();
            if err > 1e-5 * (1.0 + analytic.amax()) {
                return Err(Error::Consistency(format!(
                    "drift `{}` covariant derivative disagrees with finite differences by {err:e}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn chart_sign(chart: Chart) -> f64 {
    match chart {
        Chart::Primary => 1.0,
        Chart::Antipodal => -1.0,
    }
}

/// Normalized height `F = σ (1 − s)/(1 + s)`, `s = K|y|²`.
pub(crate) fn height(k: f64, y: &[f64], chart: Chart) -> f64 {
    let s = k * y.iter().map(|c| c * c).sum::<f64>();
    chart_sign(chart) * (1.0 - s) / (1.0 + s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ou_drift_values() {
        let e = ManifoldModel::euclidean(2);
        let z = DriftField::builtin(&e, "ou").unwrap();
        let p = Point::from_slice(&[0.5, -2.0]);
        assert_eq!(z.value(&p), DVector::from_column_slice(&[-0.5, 2.0]));
        assert_eq!(z.covariant_derivative(&p), -DMatrix::identity(2, 2));
    }

    #[test]
    fn height_gradient_passes_self_check_on_both_curved_models() {
        let s = ManifoldModel::unit_sphere(2);
        assert!(DriftField::builtin(&s, "height_gradient").is_ok());
        let h = ManifoldModel::hyperbolic(3, 0.5).unwrap();
        assert!(DriftField::builtin(&h, "height_gradient").is_ok());
    }

    #[test]
    fn unknown_drift_suggests_nearest() {
        let e = ManifoldModel::euclidean(2);
        match DriftField::builtin(&e, "0u") {
            Err(Error::Catalog { suggestion, .. }) => assert_eq!(suggestion.as_deref(), Some("ou")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(DriftField::builtin(&ManifoldModel::unit_sphere(2), "ou").is_err());
    }
}
