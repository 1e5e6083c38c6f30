use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// How the left-hand side was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LhsMethod {
    GridScan,
    MonteCarlo,
    Quadrature,
}

/// One inequality check `LHS ≤ RHS`, with enough data to recompute `pass`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub theorem: String,
    pub model: String,
    pub function: String,
    pub r0: Option<f64>,
    pub delta: Option<f64>,
    /// Remaining numeric configuration: radii, resolution, horizon, paths, seed.
    pub config: BTreeMap<String, f64>,
    pub method: LhsMethod,
    pub lhs: f64,
    /// Standard error of a Monte Carlo left-hand side.
    pub lhs_se: Option<f64>,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    /// Tolerance in favour of the inequality.
    pub slack: f64,
    /// `margin ≥ −slack`.
    pub pass: bool,
    /// Wall-clock seconds of the job that produced the check.
    pub elapsed_s: f64,
}

impl CheckReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        theorem: &str,
        model: &str,
        function: &str,
        r0: Option<f64>,
        delta: Option<f64>,
        method: LhsMethod,
        lhs: f64,
        rhs: f64,
        slack: f64,
    ) -> Self {
        let margin = rhs - lhs;
        CheckReport {
            theorem: theorem.into(),
            model: model.into(),
            function: function.into(),
            r0,
            delta,
            config: BTreeMap::new(),
            method,
            lhs,
            lhs_se: None,
            rhs,
            margin,
            slack,
            pass: margin >= -slack,
            elapsed_s: 0.0,
        }
    }

    pub fn with_config(mut self, key: &str, value: f64) -> Self {
        self.config.insert(key.into(), value);
        self
    }

    pub fn with_se(mut self, se: f64) -> Self {
        self.lhs_se = Some(se);
        self
    }

    pub fn with_elapsed(mut self, s: f64) -> Self {
        self.elapsed_s = s;
        self
    }

    /// Recomputes `margin` and `pass` from the stored values.
    pub fn is_consistent(&self) -> bool {
        let margin = self.rhs - self.lhs;
        margin == self.margin && (margin >= -self.slack) == self.pass
    }

    /// Sort key of the sweep matrix.
    pub fn key(&self) -> (String, String, String, u64, u64) {
        (
            self.theorem.clone(),
            self.model.clone(),
            self.function.clone(),
            self.r0.unwrap_or(f64::NAN).to_bits(),
            self.delta.unwrap_or(f64::NAN).to_bits(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_flag_follows_margin_and_slack() {
        let r = CheckReport::new("main", "euclidean", "x1", Some(1.0), Some(1.0), LhsMethod::GridScan, 1.0, 0.99, 0.02);
        assert!(r.pass && r.is_consistent());
        let r = CheckReport::new("main", "euclidean", "x1", None, None, LhsMethod::GridScan, 1.0, 0.97, 0.02);
        assert!(!r.pass && r.is_consistent());
        let mut bad = r.clone();
        bad.pass = true;
        assert!(!bad.is_consistent());
    }
}
