//! Experiment configuration file.
//!
//! A TOML document with the sections `[manifold]`, `[domain]`, `[fields]`,
//! `[estimator]`, `[bounds]` and `[output]`. Every section and key is
//! optional except where a subcommand needs it; unknown keys are rejected.

use std::path::{Path, PathBuf};

use bismut_core::fields::{DriftField, OneFormField, TestField};
use bismut_core::geometry::{DomainSpec, ManifoldModel, ModelKind, Point};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub manifold: ManifoldSection,
    pub domain: Option<DomainSection>,
    pub fields: FieldsSection,
    pub estimator: EstimatorSection,
    pub bounds: BoundsSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManifoldSection {
    /// `euclidean`, `sphere`, `hyperbolic` or `torus`.
    pub kind: String,
    pub dim: usize,
    /// Sphere radius.
    pub radius: Option<f64>,
    /// Hyperbolic curvature magnitude `κ`.
    pub curvature: Option<f64>,
    /// Torus periods, one per axis.
    pub periods: Option<Vec<f64>>,
}

impl Default for ManifoldSection {
    fn default() -> Self {
        ManifoldSection {
            kind: "euclidean".into(),
            dim: 2,
            radius: None,
            curvature: None,
            periods: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub center: Vec<f64>,
    pub outer_radius: f64,
    pub inner_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldsSection {
    pub function: String,
    pub drift: String,
    pub oneform: Option<String>,
}

impl Default for FieldsSection {
    fn default() -> Self {
        FieldsSection {
            function: "one".into(),
            drift: "zero".into(),
            oneform: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSection {
    /// `p1`, `p2`, `bismut_p1`, `bismut_p2`, `eigen_gradient`, `exit_time`,
    /// `reconstruct` or `h_energy`.
    pub quantity: String,
    pub t: f64,
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    /// Worker threads; `0` uses every core.
    pub workers: usize,
    /// Evaluation point; defaults to the domain center, else the origin.
    pub point: Option<Vec<f64>>,
    /// Tangent vector for `eigen_gradient`.
    pub direction: Option<Vec<f64>>,
    /// Quadrature nodes for `reconstruct`.
    pub nodes: usize,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        EstimatorSection {
            quantity: "p1".into(),
            t: 0.25,
            dt: 1e-3,
            paths: 10_000,
            seed: 0,
            workers: 0,
            point: None,
            direction: None,
            nodes: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSection {
    pub delta: f64,
    /// δ values of the sweep.
    pub deltas: Vec<f64>,
    /// r₀ values of the sweep.
    pub r0s: Vec<f64>,
    pub p: f64,
    /// BDG constant `C_q`, required for `p ≠ 2`.
    pub bdg: Option<f64>,
    /// Grid points per unit length.
    pub resolution: f64,
    /// Quadrature nodes per axis.
    pub quadrature_points: usize,
}

impl Default for BoundsSection {
    fn default() -> Self {
        BoundsSection {
            delta: 1.0,
            deltas: bismut_core::verify::SWEEP_DELTAS.to_vec(),
            r0s: bismut_core::verify::SWEEP_R0S.to_vec(),
            p: 2.0,
            bdg: None,
            resolution: bismut_core::geometry::DEFAULT_RESOLUTION,
            quadrature_points: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

/// Problems with the configuration file or flags; exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<bismut_core::Error> for ConfigError {
    fn from(e: bismut_core::Error) -> Self {
        ConfigError(e.to_string())
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn model(&self) -> Result<ManifoldModel, ConfigError> {
        let m = &self.manifold;
        let kind = match m.kind.as_str() {
            "euclidean" => ModelKind::Euclidean,
            "sphere" => ModelKind::Sphere {
                radius: m.radius.unwrap_or(1.0),
            },
            "hyperbolic" => ModelKind::Hyperbolic {
                curvature: m.curvature.unwrap_or(1.0),
            },
            "torus" => ModelKind::FlatTorus {
                periods: m
                    .periods
                    .clone()
                    .unwrap_or_else(|| vec![2.0 * std::f64::consts::PI; m.dim]),
            },
            other => {
                return Err(ConfigError(format!(
                    "unknown manifold.kind `{other}` (expected euclidean, sphere, hyperbolic or torus)"
                )))
            }
        };
        Ok(ManifoldModel::new(m.dim, kind)?)
    }

    pub fn domain(&self, model: &ManifoldModel) -> Result<Option<DomainSpec>, ConfigError> {
        match &self.domain {
            None => Ok(None),
            Some(d) => Ok(Some(DomainSpec::new(
                model,
                Point::from_slice(&d.center),
                d.outer_radius,
                d.inner_radius,
            )?)),
        }
    }

    pub fn require_domain(&self, model: &ManifoldModel) -> Result<DomainSpec, ConfigError> {
        self.domain(model)?
            .ok_or_else(|| ConfigError("this subcommand needs a [domain] section".into()))
    }

    pub fn function(&self, model: &ManifoldModel) -> Result<TestField, ConfigError> {
        Ok(TestField::builtin(model, &self.fields.function)?)
    }

    pub fn drift(&self, model: &ManifoldModel) -> Result<DriftField, ConfigError> {
        Ok(DriftField::builtin(model, &self.fields.drift)?)
    }

    pub fn oneform(&self, model: &ManifoldModel) -> Result<Option<OneFormField>, ConfigError> {
        match &self.fields.oneform {
            None => Ok(None),
            Some(name) => Ok(Some(OneFormField::builtin(model, name)?)),
        }
    }

    /// Evaluation point: `estimator.point`, else the domain center, else the origin.
    pub fn point(&self, model: &ManifoldModel) -> Point {
        match (&self.estimator.point, &self.domain) {
            (Some(p), _) => Point::from_slice(p),
            (None, Some(d)) => Point::from_slice(&d.center),
            (None, None) => Point::from_slice(&vec![0.0; model.dim()]),
        }
    }

    /// Checks that the model and every referenced catalog name resolve.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let model = self.model()?;
        self.domain(&model)?;
        self.function(&model)?;
        self.drift(&model)?;
        self.oneform(&model)?;
        if !(self.bounds.delta.is_finite() && self.bounds.delta > 0.0) {
            return Err(ConfigError(format!("bounds.delta must be positive, got {}", self.bounds.delta)));
        }
        if let Some(d) = self.bounds.deltas.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(ConfigError(format!("bounds.deltas entries must be positive, got {d}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[manifold]
kind = "sphere"
dim = 2
radius = 1.0

[domain]
center = [1.0, 0.0]
outer_radius = 1.0
inner_radius = 0.5

[fields]
function = "cos_theta"

[estimator]
quantity = "p1"
t = 0.5
paths = 1000
seed = 42

[bounds]
delta = 0.5
"#;

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.manifold.kind, "sphere");
        assert_eq!(c.estimator.dt, 1e-3);
        let again = ExperimentConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(ExperimentConfig::parse(&ExperimentConfig::default().to_toml()).unwrap(), ExperimentConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::parse("[bounds]\ndelt = 1.0\n").unwrap_err();
        assert!(err.0.contains("delt"), "{err}");
        let err = ExperimentConfig::parse("[extra]\na = 1\n").unwrap_err();
        assert!(err.0.contains("extra"), "{err}");
    }

    #[test]
    fn catalog_names_are_checked() {
        let mut c = ExperimentConfig::parse(SAMPLE).unwrap();
        c.fields.function = "cos_thet".into();
        let err = c.validate().unwrap_err();
        assert!(err.0.contains("cos_theta"), "{err}");
    }

    #[test]
    fn non_positive_delta_is_rejected() {
        let mut c = ExperimentConfig::parse(SAMPLE).unwrap();
        c.bounds.delta = 0.0;
        assert!(c.validate().unwrap_err().0.contains("delta"));
    }
}
