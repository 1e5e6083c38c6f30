//! The deterministic theorem matrix.
//!
//! Each job scans one (model, drift, function, r₀) combination once and then
//! evaluates every δ against the cached sup-norms. Jobs run on a rayon pool
//! and come back in job order.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::checks::{scan_function, FunctionScan};
use super::report::CheckReport;
use crate::error::{param, Result};
use crate::fields::{function_names, DriftField, TestField};
use crate::geometry::{DomainSpec, ManifoldModel, Point};

/// One model of the matrix with the center of its balls and its drift.
#[derive(Debug, Clone)]
pub struct SweepCase {
    pub model: ManifoldModel,
    pub center: Point,
    pub drift: String,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub cases: Vec<SweepCase>,
    pub deltas: Vec<f64>,
    pub r0s: Vec<f64>,
    /// Radius `R₀` of `D₀`; `D` has radius `R₀ + r₀`.
    pub inner_radius: f64,
    /// Grid points per unit length.
    pub resolution: f64,
}

pub const SWEEP_DELTAS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
pub const SWEEP_R0S: [f64; 3] = [0.25, 0.5, 1.0];
pub const SWEEP_INNER_RADIUS: f64 = 0.5;

fn zero_drift_cases() -> Vec<SweepCase> {
    let case = |model: ManifoldModel, c: &[f64]| SweepCase {
        model,
        center: Point::from_slice(c),
        drift: "zero".into(),
    };
    vec![
        case(ManifoldModel::euclidean(2), &[0.0, 0.0]),
        case(ManifoldModel::unit_sphere(2), &[1.0, 0.0]),
        case(ManifoldModel::flat_torus(vec![2.0 * PI, 2.0 * PI]).expect("valid torus"), &[1.0, 1.0]),
        case(ManifoldModel::hyperbolic(2, 1.0).expect("valid curvature"), &[0.0, 0.0]),
    ]
}

impl SweepSpec {
    /// Four models with zero drift, every catalog function, five δ and three r₀.
    pub fn default_matrix() -> Self {
        SweepSpec {
            cases: zero_drift_cases(),
            deltas: SWEEP_DELTAS.to_vec(),
            r0s: SWEEP_R0S.to_vec(),
            inner_radius: SWEEP_INNER_RADIUS,
            resolution: crate::geometry::DEFAULT_RESOLUTION,
        }
    }

    /// The default matrix plus every non-zero catalog drift.
    pub fn full_matrix() -> Self {
        let mut spec = Self::default_matrix();
        let base = spec.cases.clone();
        for c in base {
            for name in crate::fields::drift_names(&c.model) {
                if *name != "zero" {
                    spec.cases.push(SweepCase {
                        drift: name.to_string(),
                        ..c.clone()
                    });
                }
            }
        }
        spec
    }

    fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() || self.r0s.is_empty() || self.cases.is_empty() {
            return Err(param("sweep", "cases, deltas and r0 lists must be non-empty"));
        }
        if let Some(d) = self.deltas.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(param("delta", format!("must be positive, got {d}")));
        }
        Ok(())
    }
}

struct Job<'a> {
    case: &'a SweepCase,
    function: &'static str,
    r0: f64,
}

fn run_job(spec: &SweepSpec, job: &Job) -> Result<Vec<CheckReport>> {
    let model = &job.case.model;
    let drift = DriftField::builtin_with(model, &job.case.drift, false)?;
    let u = TestField::builtin_with(model, job.function, false)?;
    let dom = DomainSpec::new(model, job.case.center.clone(), spec.inner_radius + job.r0, spec.inner_radius)?;
    let scan = scan_function(model, &dom, &u, &drift, spec.resolution)?;
    reports_for(&scan, &spec.deltas)
}

fn tag(mut r: CheckReport, drift: &str) -> CheckReport {
    if drift != "zero" {
        r.model = format!("{}+{drift}", r.model);
    }
    r
}

fn reports_for(scan: &FunctionScan, deltas: &[f64]) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for &d in deltas {
        out.push(tag(scan.main(d)?, &scan.drift));
    }
    if scan.eigenvalue.is_some() {
        for &d in deltas {
            out.push(tag(scan.eigen_local(d)?, &scan.drift));
        }
    }
    if scan.drift == "zero" {
        out.push(scan.taylor()?);
    }
    Ok(out)
}

/// Runs the matrix with `workers` threads (`0` uses the global pool).
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<Vec<CheckReport>> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for case in &spec.cases {
        for &function in function_names(&case.model) {
            for &r0 in &spec.r0s {
                jobs.push(Job { case, function, r0 });
            }
        }
    }
    let run = || -> Vec<Result<Vec<CheckReport>>> { jobs.par_iter().map(|j| run_job(spec, j)).collect() };
    let results = if workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| param("workers", e.to_string()))?;
        pool.install(run)
    } else {
        run()
    };
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}
