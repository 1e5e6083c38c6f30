//! Individual inequality checks.
//!
//! Deterministic checks scan analytic fields on geodesic grids: the
//! left-hand side is the grid maximum over `D₀` and carries its Lipschitz
//! slack, while right-hand-side sup-norms over `D` enter as `value + slack`.
//! Monte Carlo checks use `3·SE` as slack.

use std::time::Instant;

use nalgebra::DVector;

use super::quadrature::{lp_norms, TensorGrid};
use super::report::{CheckReport, LhsMethod};
use crate::bounds::{
    eigen_bound_global, eigen_bound_local, forms_bound, forms_eigen_bound, lp_bound,
    main_bound, prelim_bound, taylor_bound, BoundInputs, FormBounds, FormSign,
};
use crate::diffusion::h_energy_bound;
use crate::error::{param, Error, Result};
use crate::estimators::{bismut_gradients, h_energy, McParams};
use crate::fields::{scan_sup, DriftField, OneFormField, SupNorm, TestField};
use crate::geometry::{domain_bounds, BallGrid, CurvatureBounds, DomainSpec, ManifoldModel, ModelKind, Point};

/// Minimum number of grid points across `r₀`.
pub const MIN_POINTS_ACROSS: f64 = 10.0;

/// Short model label used in artifacts.
pub fn model_label(model: &ManifoldModel) -> &'static str {
    match model.kind() {
        ModelKind::Euclidean => "euclidean",
        ModelKind::Sphere { .. } => "sphere",
        ModelKind::Hyperbolic { .. } => "hyperbolic",
        ModelKind::FlatTorus { .. } => "torus",
    }
}

fn grids(model: &ManifoldModel, dom: &DomainSpec, resolution: f64) -> Result<(BallGrid, BallGrid)> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(param("resolution", format!("must be positive, got {resolution}")));
    }
    if dom.r0() * resolution < MIN_POINTS_ACROSS - 1e-9 {
        return Err(param(
            "resolution",
            format!(
                "grid too coarse: {:.2} points across r0 = {}, need {MIN_POINTS_ACROSS}",
                dom.r0() * resolution,
                dom.r0()
            ),
        ));
    }
    let h = 1.0 / resolution;
    let inner = BallGrid::new(model, dom.center(), dom.inner_radius(), h)?;
    let outer = BallGrid::new(model, dom.center(), dom.outer_radius(), h)?;
    Ok((inner, outer))
}

/// Grid scans of a test function shared by the main, Taylor and eigenfunction checks.
#[derive(Debug, Clone)]
pub struct FunctionScan {
    pub model: String,
    pub function: String,
    pub drift: String,
    pub n: usize,
    pub r0: f64,
    pub outer_radius: f64,
    pub inner_radius: f64,
    pub resolution: f64,
    /// `sup_{D₀}|du|`.
    pub du_inner: SupNorm,
    /// `sup_D|u|`.
    pub u_outer: SupNorm,
    /// `sup_D|2Lu|`.
    pub lu2_outer: SupNorm,
    /// `sup_D|Hess u|`.
    pub hess_outer: SupNorm,
    pub bounds: CurvatureBounds,
    /// `λ` with `2Lu = −λu`, when positive.
    pub eigenvalue: Option<f64>,
    pub elapsed_s: f64,
}

pub fn scan_function(
    model: &ManifoldModel,
    dom: &DomainSpec,
    u: &TestField,
    drift: &DriftField,
    resolution: f64,
) -> Result<FunctionScan> {
    let start = Instant::now();
    let (inner, outer) = grids(model, dom, resolution)?;
    let bounds = domain_bounds(model, dom, drift)?;
    let eigenvalue = if drift.is_zero() {
        u.eigenvalue().filter(|l| *l > 0.0)
    } else {
        None
    };
    Ok(FunctionScan {
        model: model_label(model).into(),
        function: u.name().into(),
        drift: drift.name().into(),
        n: model.dim(),
        r0: dom.r0(),
        outer_radius: dom.outer_radius(),
        inner_radius: dom.inner_radius(),
        resolution,
        du_inner: scan_sup(&inner, |p| u.differential_norm(p)),
        u_outer: scan_sup(&outer, |p| u.value(p)),
        lu2_outer: scan_sup(&outer, |p| u.generator2(p, drift)),
        hess_outer: scan_sup(&outer, |p| u.hessian_norm(p)),
        bounds,
        eigenvalue,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

impl FunctionScan {
    fn report(&self, theorem: &str, delta: Option<f64>, rhs: f64) -> CheckReport {
        CheckReport::new(
            theorem,
            &self.model,
            &self.function,
            Some(self.r0),
            delta,
            LhsMethod::GridScan,
            self.du_inner.value,
            rhs,
            self.du_inner.slack,
        )
        .with_config("outer_radius", self.outer_radius)
        .with_config("inner_radius", self.inner_radius)
        .with_config("resolution", self.resolution)
        .with_config("sup_u", self.u_outer.upper())
        .with_config("k0_minus", self.bounds.k0_minus)
        .with_config("kz_minus", self.bounds.kz_minus)
        .with_config("sup_z", self.bounds.sup_z)
        .with_elapsed(self.elapsed_s)
    }

    fn inputs(&self, delta: f64) -> Result<BoundInputs> {
        BoundInputs::new(self.n, self.r0, delta, self.bounds)
    }

    /// `sup_{D₀}|du| ≤ C(2δ/r₀ sup_D|u| + r₀/(2δ) sup_D|2Lu|)`.
    pub fn main(&self, delta: f64) -> Result<CheckReport> {
        let rhs = main_bound(&self.inputs(delta)?, self.u_outer.upper(), self.lu2_outer.upper())?;
        Ok(self
            .report("main", Some(delta), rhs)
            .with_config("sup_lu2", self.lu2_outer.upper()))
    }

    /// `sup_{D₀}|du| ≤ 2/r₀ sup_D|u| + r₀/2 sup_D|Hess u|`.
    pub fn taylor(&self) -> Result<CheckReport> {
        let rhs = taylor_bound(self.r0, self.u_outer.upper(), self.hess_outer.upper())?;
        Ok(self
            .report("taylor", None, rhs)
            .with_config("sup_hess", self.hess_outer.upper()))
    }

    /// Eigenfunction variant `√λ C^{1/λ}(2δ/r₀ + r₀/(2δ)) sup_D|u|`.
    pub fn eigen_local(&self, delta: f64) -> Result<CheckReport> {
        let lambda = self
            .eigenvalue
            .ok_or_else(|| param("eigenvalue", format!("`{}` is not an eigenfunction of 2L", self.function)))?;
        let rhs = eigen_bound_local(&self.inputs(delta)?.with_lambda(lambda), self.u_outer.upper())?;
        Ok(self
            .report("eigen_local", Some(delta), rhs)
            .with_config("lambda", lambda))
    }
}

pub fn check_main_theorem(
    model: &ManifoldModel,
    dom: &DomainSpec,
    u: &TestField,
    drift: &DriftField,
    delta: f64,
    resolution: f64,
) -> Result<CheckReport> {
    scan_function(model, dom, u, drift, resolution)?.main(delta)
}

pub fn check_taylor_baseline(
    model: &ManifoldModel,
    dom: &DomainSpec,
    u: &TestField,
    resolution: f64,
) -> Result<CheckReport> {
    scan_function(model, dom, u, &DriftField::zero(model), resolution)?.taylor()
}

pub fn check_eigen_local(
    model: &ManifoldModel,
    dom: &DomainSpec,
    u: &TestField,
    delta: f64,
    resolution: f64,
) -> Result<CheckReport> {
    scan_function(model, dom, u, &DriftField::zero(model), resolution)?.eigen_local(delta)
}

/// `E ∫₀^{t∧τ} ḣ² ds ≤ c/(1 − e^{−ct})` on `B(center, radius)`.
pub fn check_energy_bound(
    model: &ManifoldModel,
    drift: &DriftField,
    center: &Point,
    radius: f64,
    t: f64,
    params: &McParams,
) -> Result<CheckReport> {
    let start = Instant::now();
    let r = h_energy(model, drift, center, radius, t, params)?;
    let c = r
        .detail("cutoff_constant")
        .ok_or_else(|| Error::Consistency("energy report lacks the cutoff constant".into()))?;
    let rhs = h_energy_bound(c, t);
    Ok(CheckReport::new(
        "energy",
        model_label(model),
        "h_energy",
        Some(radius),
        None,
        LhsMethod::MonteCarlo,
        r.value(),
        rhs,
        3.0 * r.se(),
    )
    .with_se(r.se())
    .with_config("t", t)
    .with_config("dt", r.dt)
    .with_config("paths", r.paths as f64)
    .with_config("seed", params.seed as f64)
    .with_config("cutoff_constant", c)
    .with_elapsed(start.elapsed().as_secs_f64()))
}

/// `|dP¹_t u|(x) ∨ |dP²_t u|(x) ≤ sup_D|u| t^{−1/2}(c t e^{K_Z⁻t}/(1 − e^{−ct}))^{1/2}`,
/// with both gradients estimated on shared paths. Returns one report per
/// semigroup.
#[allow(clippy::too_many_arguments)]
pub fn check_prelim(
    model: &ManifoldModel,
    drift: &DriftField,
    dom: &DomainSpec,
    u: &TestField,
    x: &Point,
    t: f64,
    params: &McParams,
    resolution: f64,
) -> Result<[CheckReport; 2]> {
    let start = Instant::now();
    let (_, outer) = grids(model, dom, resolution)?;
    let sup_u = scan_sup(&outer, |p| u.value(p)).upper();
    let r = bismut_gradients(model, drift, u, x, t, Some(dom), params)?;
    let inp = BoundInputs::new(model.dim(), dom.r0(), 1.0, r.bounds)?;
    let rhs = prelim_bound(&inp, t, sup_u)?;
    let lambda = model.conformal_factor(x);
    let elapsed = start.elapsed().as_secs_f64();
    let make = |theorem: &str, est: &[f64], se: &[f64]| {
        let v = DVector::from_column_slice(est);
        let lhs = model.covector_norm(x, &v);
        let se = se.iter().map(|s| s * s).sum::<f64>().sqrt() / lambda;
        CheckReport::new(
            theorem,
            model_label(model),
            u.name(),
            Some(dom.r0()),
            None,
            LhsMethod::MonteCarlo,
            lhs,
            rhs,
            3.0 * se,
        )
        .with_se(se)
        .with_config("t", t)
        .with_config("dt", r.p1.dt)
        .with_config("paths", r.p1.paths as f64)
        .with_config("seed", params.seed as f64)
        .with_config("sup_u", sup_u)
        .with_elapsed(elapsed)
    };
    Ok([
        make("prelim_p1", &r.p1.estimate, &r.p1.std_error),
        make("prelim_p2", &r.p2.estimate, &r.p2.std_error),
    ])
}

/// `Ric ≥ K` on a closed model.
fn global_ricci_lower(model: &ManifoldModel) -> f64 {
    (model.dim() as f64 - 1.0) * model.sectional_curvature()
}

/// `‖du‖_p ≤ C_q^{1/q} e^{K⁻/(8δ²)}(2δ‖u‖_p + ‖Δu‖_p/(2δ))` by quadrature with
/// `points` nodes per axis. The slack is the change of both sides between
/// `points` and `points/2` nodes.
pub fn check_lp_theorem(
    model: &ManifoldModel,
    u: &TestField,
    p: f64,
    bdg: Option<f64>,
    delta: f64,
    points: usize,
) -> Result<CheckReport> {
    let start = Instant::now();
    let mut inp = BoundInputs::new(model.dim(), 1.0, delta, CurvatureBounds::zero())?
        .with_p(p)
        .with_ricci_lower(global_ricci_lower(model));
    inp.bdg = bdg;
    let fine = lp_norms(model, u, p, points)?;
    let coarse = lp_norms(model, u, p, (points / 2).max(4))?;
    let rhs = lp_bound(&inp, fine.u, fine.laplacian)?;
    let rhs_coarse = lp_bound(&inp, coarse.u, coarse.laplacian)?;
    let slack = (fine.du - coarse.du).abs() + (rhs - rhs_coarse).abs();
    Ok(CheckReport::new(
        "lp",
        model_label(model),
        u.name(),
        None,
        Some(delta),
        LhsMethod::Quadrature,
        fine.du,
        rhs,
        slack,
    )
    .with_config("p", p)
    .with_config("points", points as f64)
    .with_config("norm_u", fine.u)
    .with_config("norm_laplacian", fine.laplacian)
    .with_config("ricci_lower", global_ricci_lower(model))
    .with_elapsed(start.elapsed().as_secs_f64()))
}

/// `|du|_∞ ≤ |u|_∞ e √(λ/2)((1 − e^{−2K/λ})/(2K/λ))^{1/2}` with both sup-norms
/// taken on the quadrature nodes; slack is the largest jump of `|du|`
/// between adjacent nodes.
pub fn check_eigen_global(model: &ManifoldModel, u: &TestField, points: usize) -> Result<CheckReport> {
    let start = Instant::now();
    let lambda = u
        .eigenvalue()
        .filter(|l| *l > 0.0)
        .ok_or_else(|| param("eigenvalue", format!("`{}` has no positive eigenvalue", u.name())))?;
    let grid = TensorGrid::new(model, points)?;
    let du: Vec<f64> = grid.points.iter().map(|x| u.differential_norm(x)).collect();
    let sup_u = grid.points.iter().map(|x| u.value(x).abs()).fold(0.0, f64::max);
    let lhs = du.iter().cloned().fold(0.0, f64::max);
    let k = global_ricci_lower(model);
    let rhs = eigen_bound_global(k, lambda, sup_u)?;
    Ok(CheckReport::new(
        "eigen_global",
        model_label(model),
        u.name(),
        None,
        None,
        LhsMethod::GridScan,
        lhs,
        rhs,
        grid.max_jump(&du),
    )
    .with_config("lambda", lambda)
    .with_config("ricci_lower", k)
    .with_config("points", points as f64)
    .with_elapsed(start.elapsed().as_secs_f64()))
}

/// Which form estimate to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormsVariant {
    /// `sup_{D₀}|dα| ≤ C_{p,+}(…)`.
    Exterior,
    /// `sup_{D₀}|δα| ≤ C_{p,−}(…)`.
    Codifferential,
    /// Eigenform version of [`FormsVariant::Exterior`].
    EigenExterior,
    /// Eigenform version of [`FormsVariant::Codifferential`].
    EigenCodifferential,
}

impl FormsVariant {
    pub const ALL: [FormsVariant; 4] = [
        FormsVariant::Exterior,
        FormsVariant::Codifferential,
        FormsVariant::EigenExterior,
        FormsVariant::EigenCodifferential,
    ];

    pub fn theorem(self) -> &'static str {
        match self {
            FormsVariant::Exterior => "forms_d",
            FormsVariant::Codifferential => "forms_codiff",
            FormsVariant::EigenExterior => "forms_eigen_d",
            FormsVariant::EigenCodifferential => "forms_eigen_codiff",
        }
    }

    fn sign(self) -> FormSign {
        match self {
            FormsVariant::Exterior | FormsVariant::EigenExterior => FormSign::Plus,
            _ => FormSign::Minus,
        }
    }

    pub fn is_eigen(self) -> bool {
        matches!(self, FormsVariant::EigenExterior | FormsVariant::EigenCodifferential)
    }
}

/// Form estimates for a 1-form on the flat torus, where every Weitzenböck
/// bound vanishes.
pub fn check_forms_theorem(
    model: &ManifoldModel,
    alpha: &OneFormField,
    variant: FormsVariant,
    delta: f64,
    dom: &DomainSpec,
    resolution: f64,
) -> Result<CheckReport> {
    let start = Instant::now();
    if !matches!(model.kind(), ModelKind::FlatTorus { .. }) {
        return Err(Error::Domain("form checks are implemented on the flat torus".into()));
    }
    let (inner, outer) = grids(model, dom, resolution)?;
    let lhs = match variant.sign() {
        FormSign::Plus => scan_sup(&inner, |p| alpha.exterior_derivative_norm(p)),
        FormSign::Minus => scan_sup(&inner, |p| alpha.codifferential_norm(p)),
    };
    let sup_alpha = scan_sup(&outer, |p| alpha.norm(p)).upper();
    let mut inp = BoundInputs::new(model.dim(), dom.r0(), delta, CurvatureBounds::zero())?.with_forms(FormBounds::flat(1));
    let rhs = if variant.is_eigen() {
        let lambda = alpha
            .eigenvalue()
            .filter(|l| *l > 0.0)
            .ok_or_else(|| param("eigenvalue", format!("`{}` has no positive eigenvalue", alpha.name())))?;
        inp = inp.with_lambda(lambda);
        forms_eigen_bound(&inp, variant.sign(), sup_alpha)?
    } else {
        let sup_lap = scan_sup(&outer, |p| alpha.hodge_laplacian_norm(p)).upper();
        forms_bound(&inp, variant.sign(), sup_alpha, sup_lap)?
    };
    let mut r = CheckReport::new(
        variant.theorem(),
        model_label(model),
        alpha.name(),
        Some(dom.r0()),
        Some(delta),
        LhsMethod::GridScan,
        lhs.value,
        rhs,
        lhs.slack,
    )
    .with_config("outer_radius", dom.outer_radius())
    .with_config("inner_radius", dom.inner_radius())
    .with_config("resolution", resolution)
    .with_config("sup_alpha", sup_alpha);
    if let Some(l) = inp.lambda {
        r = r.with_config("lambda", l);
    }
    Ok(r.with_elapsed(start.elapsed().as_secs_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn euclid_dom(r0: f64) -> (ManifoldModel, DomainSpec) {
        let e = ManifoldModel::euclidean(2);
        let d = DomainSpec::new(&e, Point::from_slice(&[0.0, 0.0]), 1.0 + r0, 1.0).unwrap();
        (e, d)
    }

    #[test]
    fn linear_function_passes_main_and_taylor() {
        let (e, d) = euclid_dom(1.0);
        let u = TestField::builtin(&e, "x1").unwrap();
        let z = DriftField::zero(&e);
        let s = scan_function(&e, &d, &u, &z, 40.0).unwrap();
        assert!((s.du_inner.value - 1.0).abs() < 1e-12);
        assert!((s.u_outer.value - 2.0).abs() < 1e-12);
        let m = s.main(1.0).unwrap();
        assert!(m.pass && m.is_consistent());
        let t = s.taylor().unwrap();
        assert!(t.pass);
        assert!((t.rhs - 2.0 * s.u_outer.upper()).abs() < 1e-12);
    }

    #[test]
    fn taylor_harmonic_quadratic_example() {
        let (e, d) = euclid_dom(1.0);
        let u = TestField::builtin(&e, "x1sq_minus_x2sq").unwrap();
        let r = check_taylor_baseline(&e, &d, &u, 40.0).unwrap();
        // sup|du| over the unit disc is 2, sup|u| over the radius-2 disc is 4
        assert!((r.lhs - 2.0).abs() < 1e-9, "{}", r.lhs);
        assert!(r.rhs >= 9.0 && r.rhs < 9.5, "{}", r.rhs);
        assert!(r.pass);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let (e, d) = euclid_dom(0.25);
        let u = TestField::builtin(&e, "x1").unwrap();
        assert!(check_main_theorem(&e, &d, &u, &DriftField::zero(&e), 1.0, 20.0).is_err());
        assert!(check_main_theorem(&e, &d, &u, &DriftField::zero(&e), 1.0, 40.0).is_ok());
    }

    #[test]
    fn sphere_eigen_local_example() {
        let s = ManifoldModel::unit_sphere(2);
        let d = DomainSpec::new(&s, Point::from_slice(&[1.0, 0.0]), 1.0, 0.5).unwrap();
        let u = TestField::builtin(&s, "cos_theta").unwrap();
        let r = check_eigen_local(&s, &d, &u, 1.0, 40.0).unwrap();
        assert!(r.rhs >= 1.0 && r.pass);
    }

    #[test]
    fn lp_checks_on_closed_models() {
        let t = ManifoldModel::flat_torus(vec![2.0 * PI, 2.0 * PI]).unwrap();
        let u = TestField::builtin(&t, "sin_x1").unwrap();
        let r = check_lp_theorem(&t, &u, 2.0, None, 0.5, 32).unwrap();
        let norm = (2.0 * PI * PI).sqrt();
        assert!((r.rhs - 2.0 * norm).abs() < 1e-9);
        assert!(r.pass);
        let one = TestField::builtin(&t, "one").unwrap();
        assert_eq!(check_lp_theorem(&t, &one, 2.0, None, 1.0, 16).unwrap().lhs, 0.0);
        let e = ManifoldModel::euclidean(2);
        let x1 = TestField::builtin(&e, "x1").unwrap();
        assert!(check_lp_theorem(&e, &x1, 2.0, None, 1.0, 16).is_err());
    }

    #[test]
    fn eigen_global_on_sphere() {
        let s = ManifoldModel::unit_sphere(2);
        let u = TestField::builtin(&s, "cos_theta").unwrap();
        let r = check_eigen_global(&s, &u, 64).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-2);
        assert!(r.pass);
    }

    #[test]
    fn forms_examples() {
        let t = ManifoldModel::flat_torus(vec![2.0 * PI, 2.0 * PI]).unwrap();
        let d = DomainSpec::new(&t, Point::from_slice(&[1.0, 1.0]), 1.0, 0.5).unwrap();
        let a = OneFormField::builtin(&t, "sinx1_dx2").unwrap();
        for v in FormsVariant::ALL {
            let r = check_forms_theorem(&t, &a, v, 1.0, &d, 40.0).unwrap();
            assert!(r.pass, "{v:?}");
        }
        let h = OneFormField::builtin(&t, "dx1").unwrap();
        let r = check_forms_theorem(&t, &h, FormsVariant::Exterior, 1.0, &d, 40.0).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(check_forms_theorem(&t, &h, FormsVariant::EigenExterior, 1.0, &d, 40.0).is_err());
    }

    #[test]
    fn enlarging_outer_ball_keeps_lhs() {
        let e = ManifoldModel::euclidean(2);
        let u = TestField::builtin(&e, "x1x2").unwrap();
        let z = DriftField::zero(&e);
        let mut last = f64::INFINITY;
        for r0 in [0.25, 0.5, 1.0] {
            let d = DomainSpec::new(&e, Point::from_slice(&[0.0, 0.0]), 0.5 + r0, 0.5).unwrap();
            let lhs = check_main_theorem(&e, &d, &u, &z, 1.0, 40.0).unwrap().lhs;
            assert!(lhs <= last);
            last = lhs;
        }
    }
}
