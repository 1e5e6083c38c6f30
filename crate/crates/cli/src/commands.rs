//! Subcommand implementations. Each returns whether every check passed.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use bismut_core::bounds::{
    bdg_constant, eigen_bound_global, eigen_bound_local, forms_constant, lp_bound, main_bound, main_bound_optimal,
    main_constant, prelim_bound, prelim_constant, taylor_bound, BoundInputs, FormBounds, FormSign,
};
use bismut_core::diffusion::{cutoff_constant, h_energy_bound, simulate_path};
use bismut_core::estimators::{
    bismut_gradient, eigen_gradient, estimate_p1, estimate_p2, expected_exit_time, h_energy, reconstruct_identity,
    EstimateReport, McParams, Semigroup,
};
use bismut_core::geometry::{geometry_self_check, DomainSpec, ManifoldModel, ModelKind};
use bismut_core::verify::{
    lp_norms, model_label, run_suite, run_sweep, scan_function, write_artifacts, CheckReport, Suite, SweepCase,
    SweepSpec, SCHEMA_VERSION, SWEEP_INNER_RADIUS,
};
use nalgebra::DVector;
use serde_json::{json, Value};

use crate::config::{ConfigError, ExperimentConfig};

pub type CmdResult = Result<bool, ConfigError>;

/// `D₀ = B(x, ½)` inside `D = B(x, 3/2)` when the config has no domain.
const DEFAULT_OUTER_RADIUS: f64 = 1.5;

/// Prints a line; a closed stdout is not an error.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn io_err(path: &Path, e: std::io::Error) -> ConfigError {
    ConfigError(format!("cannot write {}: {e}", path.display()))
}

fn write_json(dir: &Path, file: &str, value: &Value) -> Result<(), ConfigError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(file);
    let text = serde_json::to_string_pretty(value).expect("json value serializes");
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
}

fn params(cfg: &ExperimentConfig) -> McParams {
    let e = &cfg.estimator;
    McParams::new(e.paths, e.dt, e.seed).with_workers(e.workers)
}

fn domain_or_default(cfg: &ExperimentConfig, model: &ManifoldModel) -> Result<DomainSpec, ConfigError> {
    match cfg.domain(model)? {
        Some(d) => Ok(d),
        None => Ok(DomainSpec::new(
            model,
            cfg.point(model),
            DEFAULT_OUTER_RADIUS,
            SWEEP_INNER_RADIUS,
        )?),
    }
}

fn known_models() -> Vec<ManifoldModel> {
    let mut out = vec![ManifoldModel::euclidean(2), ManifoldModel::euclidean(3), ManifoldModel::unit_sphere(2)];
    out.push(ManifoldModel::new(3, ModelKind::Sphere { radius: 2.0 }).expect("valid sphere"));
    out.push(ManifoldModel::hyperbolic(2, 1.0).expect("valid curvature"));
    out.push(ManifoldModel::hyperbolic(3, 0.5).expect("valid curvature"));
    out.push(ManifoldModel::flat_torus(vec![2.0 * std::f64::consts::PI; 2]).expect("valid torus"));
    out
}

pub fn geometry_check(cfg: &ExperimentConfig, points: usize, all: bool) -> CmdResult {
    let models = if all { known_models() } else { vec![cfg.model()?] };
    let mut checks = Vec::new();
    for m in &models {
        checks.push(geometry_self_check(m, points, cfg.estimator.seed)?);
    }
    let pass = checks.iter().all(|c| c.pass);
    for c in &checks {
        emit(&format!(
            "{} {}: christoffel {:.2e}, ricci {:.2e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.model,
            c.christoffel_max_rel_error,
            c.ricci_max_rel_error
        ));
    }
    write_json(
        &cfg.output.dir,
        "geometry.json",
        &json!({ "schema_version": SCHEMA_VERSION, "pass": pass, "checks": checks }),
    )?;
    Ok(pass)
}

pub fn simulate(cfg: &ExperimentConfig, count: usize) -> CmdResult {
    let model = cfg.model()?;
    let drift = cfg.drift(&model)?;
    let dom = cfg.domain(&model)?;
    let x = cfg.point(&model);
    let e = &cfg.estimator;
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(|err| io_err(dir, err))?;
    let mut rows = Vec::new();
    for i in 0..count as u64 {
        let path = simulate_path(&model, &drift, &x, dom.as_ref(), e.dt, e.t, e.seed, i)?;
        let file = dir.join(format!("path_{i}.csv"));
        let mut buf = Vec::new();
        path.write_columns(&mut buf).map_err(|err| io_err(&file, err))?;
        fs::write(&file, buf).map_err(|err| io_err(&file, err))?;
        let end = path.positions.last().expect("paths store their start");
        rows.push(json!({
            "path_index": i,
            "steps": path.len(),
            "exit_time": if path.exit_time.is_finite() { json!(path.exit_time) } else { Value::Null },
            "end": end.coords.as_slice(),
            "file": file.file_name().and_then(|f| f.to_str()),
        }));
    }
    let doc = json!({ "schema_version": SCHEMA_VERSION, "dt": e.dt, "horizon": e.t, "seed": e.seed, "paths": rows });
    write_json(dir, "simulate.json", &doc)?;
    emit(&serde_json::to_string_pretty(&doc).expect("json value serializes"));
    Ok(true)
}

fn run_estimator(cfg: &ExperimentConfig) -> Result<EstimateReport, ConfigError> {
    let model = cfg.model()?;
    let drift = cfg.drift(&model)?;
    let u = cfg.function(&model)?;
    let dom = cfg.domain(&model)?;
    let x = cfg.point(&model);
    let p = params(cfg);
    let t = cfg.estimator.t;
    let r = match cfg.estimator.quantity.as_str() {
        "p1" => estimate_p1(&model, &drift, &u, &x, t, dom.as_ref(), &p)?,
        "p2" => estimate_p2(&model, &drift, &u, &x, t, dom.as_ref(), &p)?,
        "bismut_p1" => bismut_gradient(&model, &drift, Semigroup::P1, &u, &x, t, dom.as_ref(), &p)?,
        "bismut_p2" => bismut_gradient(&model, &drift, Semigroup::P2, &u, &x, t, dom.as_ref(), &p)?,
        "eigen_gradient" => {
            let v = match &cfg.estimator.direction {
                Some(v) => DVector::from_column_slice(v),
                None => DVector::from_fn(model.dim(), |i, _| if i == 0 { 1.0 } else { 0.0 }),
            };
            eigen_gradient(&model, &u, &x, &v, &p)?
        }
        "exit_time" => expected_exit_time(&model, &drift, &x, t, &cfg.require_domain(&model)?, &p)?,
        "reconstruct" => reconstruct_identity(&model, &drift, &u, &x, t, dom.as_ref(), &p, cfg.estimator.nodes)?,
        "h_energy" => {
            let radius = dom.as_ref().map_or(1.0, |d| d.outer_radius());
            h_energy(&model, &drift, &x, radius, t, &p)?
        }
        other => {
            return Err(ConfigError(format!(
                "unknown estimator.quantity `{other}` (expected p1, p2, bismut_p1, bismut_p2, eigen_gradient, \
                 exit_time, reconstruct or h_energy)"
            )))
        }
    };
    Ok(r)
}

pub fn estimate(cfg: &ExperimentConfig) -> CmdResult {
    let r = run_estimator(cfg)?;
    let doc = json!({ "schema_version": SCHEMA_VERSION, "report": r });
    write_json(&cfg.output.dir, "estimate.json", &doc)?;
    emit(&serde_json::to_string_pretty(&doc).expect("json value serializes"));
    Ok(true)
}

fn finish_checks(dir: &Path, reports: &[CheckReport]) -> CmdResult {
    let paths = write_artifacts(dir, reports)?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    for r in reports.iter().filter(|r| !r.pass) {
        emit(&format!(
            "FAIL {} {} {} r0={:?} delta={:?}: lhs {} > rhs {}",
            r.theorem, r.model, r.function, r.r0, r.delta, r.lhs, r.rhs
        ));
    }
    emit(&format!(
        "{} checks, {} failed; matrix written to {}",
        reports.len(),
        failed,
        paths.matrix.display()
    ));
    Ok(failed == 0)
}

pub fn verify(cfg: &ExperimentConfig, suite: Suite) -> CmdResult {
    let reports = run_suite(suite, &params(cfg), cfg.estimator.workers)?;
    finish_checks(&cfg.output.dir, &reports)
}

/// `config` sweeps the configured model; `default` and `full` the built-in matrices.
pub fn sweep(cfg: &ExperimentConfig, matrix: &str) -> CmdResult {
    let mut spec = match matrix {
        "default" => SweepSpec::default_matrix(),
        "full" => SweepSpec::full_matrix(),
        "config" => {
            let model = cfg.model()?;
            cfg.drift(&model)?;
            SweepSpec {
                cases: vec![SweepCase {
                    center: cfg.point(&model),
                    model,
                    drift: cfg.fields.drift.clone(),
                }],
                ..SweepSpec::default_matrix()
            }
        }
        other => {
            return Err(ConfigError(format!(
                "unknown matrix `{other}` (expected config, default or full)"
            )))
        }
    };
    spec.deltas = cfg.bounds.deltas.clone();
    spec.r0s = cfg.bounds.r0s.clone();
    spec.resolution = cfg.bounds.resolution;
    if let Some(d) = &cfg.domain {
        spec.inner_radius = d.inner_radius;
    }
    let reports = run_sweep(&spec, cfg.estimator.workers)?;
    finish_checks(&cfg.output.dir, &reports)
}

fn opt(v: Option<f64>) -> Value {
    v.map_or(Value::Null, |x| json!(x))
}

/// Every constant and bound for the configured model, domain and function.
pub fn bounds_values(cfg: &ExperimentConfig) -> Result<Value, ConfigError> {
    cfg.validate()?;
    let model = cfg.model()?;
    let drift = cfg.drift(&model)?;
    let u = cfg.function(&model)?;
    let dom = domain_or_default(cfg, &model)?;
    let b = &cfg.bounds;
    let t = cfg.estimator.t;
    let n = model.dim();
    let scan = scan_function(&model, &dom, &u, &drift, b.resolution)?;
    let inp = BoundInputs::new(n, dom.r0(), b.delta, scan.bounds)?;
    let sup_u = scan.u_outer.upper();
    let sup_lu2 = scan.lu2_outer.upper();

    let main = json!({
        "constant": main_constant(&inp)?,
        "bound": main_bound(&inp, sup_u, sup_lu2)?,
        "optimal": main_bound_optimal(&inp, sup_u, sup_lu2)?,
        "lhs": scan.du_inner.value,
    });
    let taylor = if drift.is_zero() {
        json!({ "bound": taylor_bound(dom.r0(), sup_u, scan.hess_outer.upper())? })
    } else {
        Value::Null
    };
    let eigen_local = match scan.eigenvalue {
        Some(l) => json!({ "lambda": l, "bound": eigen_bound_local(&inp.clone().with_lambda(l), sup_u)? }),
        None => Value::Null,
    };
    let k_global = (n as f64 - 1.0) * model.sectional_curvature();
    let eigen_global = match scan.eigenvalue {
        Some(l) if model.is_compact() => json!({
            "lambda": l,
            "ricci_lower": k_global,
            "bound": eigen_bound_global(k_global, l, sup_u)?,
        }),
        _ => Value::Null,
    };
    let lp = if model.is_compact() && drift.is_zero() {
        let mut li = inp.clone().with_p(b.p).with_ricci_lower(k_global);
        li.bdg = b.bdg;
        let norms = lp_norms(&model, &u, b.p, b.quadrature_points)?;
        json!({
            "p": b.p,
            "bdg_constant": bdg_constant(&li)?,
            "bound": lp_bound(&li, norms.u, norms.laplacian)?,
            "lhs": norms.du,
        })
    } else {
        Value::Null
    };
    let forms = if matches!(model.kind(), ModelKind::FlatTorus { .. }) && n >= 2 {
        let fi = BoundInputs::new(n, dom.r0(), b.delta, scan.bounds)?.with_forms(FormBounds::flat(1));
        json!({
            "degree": 1,
            "plus_constant": forms_constant(&fi, FormSign::Plus)?,
            "minus_constant": forms_constant(&fi, FormSign::Minus)?,
        })
    } else {
        Value::Null
    };
    let cutoff = cutoff_constant(n, dom.r0(), scan.bounds.sup_z, scan.bounds.k0_minus);
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "model": model_label(&model),
        "function": u.name(),
        "drift": drift.name(),
        "r0": dom.r0(),
        "delta": b.delta,
        "t": t,
        "curvature": scan.bounds,
        "sup_u": sup_u,
        "sup_lu2": sup_lu2,
        "eigenvalue": opt(scan.eigenvalue),
        "main": main,
        "taylor": taylor,
        "eigen_local": eigen_local,
        "eigen_global": eigen_global,
        "lp": lp,
        "forms": forms,
        "prelim": { "constant": prelim_constant(&inp)?, "bound": prelim_bound(&inp, t, sup_u)? },
        "energy": { "cutoff_constant": cutoff, "bound": h_energy_bound(cutoff, t) },
    }))
}

pub fn bounds_eval(cfg: &ExperimentConfig) -> CmdResult {
    let doc = bounds_values(cfg)?;
    write_json(&cfg.output.dir, "bounds.json", &doc)?;
    emit(&serde_json::to_string_pretty(&doc).expect("json value serializes"));
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use bismut_core::verify::LhsMethod;

    #[test]
    fn a_failed_check_is_reported_as_failure() {
        let tmp = tempfile::tempdir().unwrap();
        let ok = CheckReport::new("main", "euclidean", "x1", Some(1.0), Some(1.0), LhsMethod::GridScan, 1.0, 2.0, 0.0);
        let bad = CheckReport::new("main", "euclidean", "x1", Some(1.0), Some(2.0), LhsMethod::GridScan, 3.0, 2.0, 0.0);
        assert!(finish_checks(tmp.path(), std::slice::from_ref(&ok)).unwrap());
        assert!(!finish_checks(tmp.path(), &[ok, bad]).unwrap());
        let csv = fs::read_to_string(tmp.path().join("matrix.csv")).unwrap();
        assert!(csv.trim_end().ends_with("false"));
    }
}
