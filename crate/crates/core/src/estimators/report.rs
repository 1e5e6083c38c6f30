use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::{McParams, Moments};
use crate::geometry::DomainEcho;

/// Result of a Monte Carlo estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub quantity: String,
    /// Scalar estimates have one component, covectors one per chart axis.
    pub estimate: Vec<f64>,
    pub std_error: Vec<f64>,
    pub paths: usize,
    /// Effective grid step.
    pub dt: f64,
    pub seed: u64,
    pub horizon: f64,
    pub domain: Option<DomainEcho>,
    /// Estimator-specific diagnostics, keyed by name.
    pub details: BTreeMap<String, f64>,
}

impl EstimateReport {
    pub(crate) fn from_moments(
        quantity: &str,
        m: &Moments,
        params: &McParams,
        dt: f64,
        horizon: f64,
        domain: Option<DomainEcho>,
    ) -> Self {
        EstimateReport {
            quantity: quantity.into(),
            estimate: m.mean().to_vec(),
            std_error: m.std_error(),
            paths: m.count(),
            dt,
            seed: params.seed,
            horizon,
            domain,
            details: BTreeMap::new(),
        }
    }

    /// First component.
    pub fn value(&self) -> f64 {
        self.estimate[0]
    }

    pub fn se(&self) -> f64 {
        self.std_error[0]
    }

    /// Euclidean norm of the per-component standard errors.
    pub fn se_norm(&self) -> f64 {
        self.std_error.iter().map(|s| s * s).sum::<f64>().sqrt()
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.get(key).copied()
    }
}
