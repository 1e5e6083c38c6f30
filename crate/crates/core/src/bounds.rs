//! Closed-form constants and right-hand sides of the gradient estimates.
//!
//! Everything here is a pure function of [`BoundInputs`] and a few sup- or
//! `Lᵖ`-norms. Exponents are assembled first and exponentiated once.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::geometry::CurvatureBounds;

/// Number of log-spaced points of the δ search grid.
pub const DELTA_GRID_POINTS: usize = 200;
/// Range of the δ search grid.
pub const DELTA_GRID_RANGE: (f64, f64) = (1e-2, 1e2);

/// Curvature data of the Weitzenböck term for `p`-forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormBounds {
    /// Form degree `p`.
    pub degree: usize,
    /// `inf ⟨R_p v, v⟩`.
    pub lower: f64,
    /// `sup ⟨R_p v, v⟩`.
    pub upper: f64,
    /// `inf ⟨R_{p+1} v, v⟩`.
    pub lower_plus: f64,
    /// `inf ⟨R_{p−1} v, v⟩`.
    pub lower_minus: f64,
}

impl FormBounds {
    /// All curvature terms zero, as on a flat torus.
    pub fn flat(degree: usize) -> Self {
        FormBounds {
            degree,
            lower: 0.0,
            upper: 0.0,
            lower_plus: 0.0,
            lower_minus: 0.0,
        }
    }
}

/// Which of the two form estimates: `d` (`+`) or `δ` (`−`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormSign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub r0: f64,
    pub delta: f64,
    pub curvature: CurvatureBounds,
    /// Eigenvalue `λ > 0`.
    pub lambda: Option<f64>,
    /// Signed global lower Ricci bound `K`.
    pub ricci_lower: Option<f64>,
    /// Integrability exponent `p > 1`.
    pub p: Option<f64>,
    /// BDG constant `C_q`; `C_2 = 1` is used when absent and `p = 2`.
    pub bdg: Option<f64>,
    pub forms: Option<FormBounds>,
}

impl BoundInputs {
    pub fn new(n: usize, r0: f64, delta: f64, curvature: CurvatureBounds) -> Result<Self> {
        let inp = BoundInputs {
            n,
            r0,
            delta,
            curvature,
            lambda: None,
            ricci_lower: None,
            p: None,
            bdg: None,
            forms: None,
        };
        inp.validate()?;
        Ok(inp)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn with_ricci_lower(mut self, k: f64) -> Self {
        self.ricci_lower = Some(k);
        self
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    pub fn with_bdg(mut self, c: f64) -> Self {
        self.bdg = Some(c);
        self
    }

    pub fn with_forms(mut self, f: FormBounds) -> Self {
        self.forms = Some(f);
        self
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        BoundInputs { delta, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(param("n", "dimension must be at least 1"));
        }
        if !(self.r0.is_finite() && self.r0 > 0.0) {
            return Err(param("r0", format!("must be positive, got {}", self.r0)));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(param("delta", format!("must be positive, got {}", self.delta)));
        }
        let c = &self.curvature;
        for (name, v) in [("k0_minus", c.k0_minus), ("kz_minus", c.kz_minus), ("sup_z", c.sup_z)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(param(name, format!("must be finite and non-negative, got {v}")));
            }
        }
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l > 0.0) {
                return Err(param("lambda", format!("must be positive, got {l}")));
            }
        }
        if let Some(p) = self.p {
            if !(p.is_finite() && p > 1.0) {
                return Err(param("p", format!("must exceed 1, got {p}")));
            }
        }
        if let Some(c) = self.bdg {
            if !(c.is_finite() && c > 0.0) {
                return Err(param("bdg", format!("must be positive, got {c}")));
            }
        }
        if let Some(k) = self.ricci_lower {
            if !k.is_finite() {
                return Err(param("ricci_lower", "must be finite"));
            }
        }
        Ok(())
    }

    /// Conjugate exponent `q = p/(p−1)`.
    pub fn q(&self) -> Option<f64> {
        self.p.map(|p| p / (p - 1.0))
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(param(name, format!("must be finite and non-negative, got {v}")))
    }
}

fn neg_part(x: f64) -> f64 {
    (-x).max(0.0)
}

/// The part of the exponent shared by `C` and `C_{p,±}`.
fn localization_exponent(inp: &BoundInputs) -> f64 {
    let n = inp.n as f64;
    let d2 = inp.delta * inp.delta;
    let c = &inp.curvature;
    PI * inp.r0 / (16.0 * d2) * (2.0 * c.sup_z + ((n - 1.0) * c.k0_minus).sqrt()) + PI * PI * (n + 3.0) / (32.0 * d2)
}

/// `C = exp[πr₀/(16δ²)(2 sup|Z| + √((n−1)K₀⁻)) + π²(n+3)/(32δ²) + r₀²K_Z⁻/(8δ²)]`.
pub fn main_constant(inp: &BoundInputs) -> Result<f64> {
    inp.validate()?;
    let d2 = inp.delta * inp.delta;
    Ok((localization_exponent(inp) + inp.r0 * inp.r0 * inp.curvature.kz_minus / (8.0 * d2)).exp())
}

/// `C(2δ/r₀ · sup_D|u| + r₀/(2δ) · sup_D|2Lu|)`.
pub fn main_bound(inp: &BoundInputs, sup_u: f64, sup_lu2: f64) -> Result<f64> {
    non_negative("sup_u", sup_u)?;
    non_negative("sup_lu2", sup_lu2)?;
    let c = main_constant(inp)?;
    let (r0, d) = (inp.r0, inp.delta);
    Ok(c * (2.0 * d / r0 * sup_u + r0 / (2.0 * d) * sup_lu2))
}

/// Local estimate on `sup_{D₀}|du|` from the second-order Taylor expansion:
/// `2/r₀ · sup_D|u| + r₀/2 · sup_D|Hess u|`.
pub fn taylor_bound(r0: f64, sup_u: f64, sup_hess: f64) -> Result<f64> {
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(param("r0", format!("must be positive, got {r0}")));
    }
    non_negative("sup_u", sup_u)?;
    non_negative("sup_hess", sup_hess)?;
    Ok(2.0 / r0 * sup_u + r0 / 2.0 * sup_hess)
}

fn lambda_of(inp: &BoundInputs) -> Result<f64> {
    inp.lambda.ok_or_else(|| param("lambda", "an eigenvalue is required"))
}

/// `√λ C^{1/λ}(2δ/r₀ + r₀/(2δ)) sup_D|u|` for `2Lu = −λu`.
pub fn eigen_bound_local(inp: &BoundInputs, sup_u: f64) -> Result<f64> {
    non_negative("sup_u", sup_u)?;
    let lambda = lambda_of(inp)?;
    let c = main_constant(inp)?;
    let (r0, d) = (inp.r0, inp.delta);
    Ok(lambda.sqrt() * c.powf(1.0 / lambda) * (2.0 * d / r0 + r0 / (2.0 * d)) * sup_u)
}

/// `|u|_∞ e √(λ/2) ((1 − e^{−2K/λ})/(2K/λ))^{1/2}` for `Δu = −λu` and `Ric ≥ K`.
pub fn eigen_bound_global(k: f64, lambda: f64, sup_u: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(param("lambda", format!("must be positive, got {lambda}")));
    }
    if !k.is_finite() {
        return Err(param("ricci_lower", "must be finite"));
    }
    non_negative("sup_u", sup_u)?;
    let x = 2.0 * k / lambda;
    let factor = if x.abs() < 1e-12 { 1.0 - x / 2.0 } else { -(-x).exp_m1() / x };
    Ok(sup_u * std::f64::consts::E * (lambda / 2.0).sqrt() * factor.sqrt())
}

/// Moment constants of the continuous-martingale BDG inequality
/// `E|M_∞|^q ≤ C_q E⟨M⟩_∞^{q/2}` for integer `q ≥ 2`: `C_q = z_q^q` with `z_q`
/// the largest zero of the Hermite polynomial `He_q`. These values come from
/// outside the estimates implemented here and are offered only as a reference.
pub fn bdg_reference(q: f64) -> Option<f64> {
    if q == 2.0 {
        Some(1.0)
    } else if q == 3.0 {
        Some(3.0 * 3f64.sqrt())
    } else if q == 4.0 {
        let z2: f64 = 3.0 + 6f64.sqrt();
        Some(z2 * z2)
    } else {
        None
    }
}

/// `C_q` to use: explicit value, else `1` for `q = 2`.
pub fn bdg_constant(inp: &BoundInputs) -> Result<f64> {
    let q = inp.q().ok_or_else(|| param("p", "an exponent p > 1 is required"))?;
    match inp.bdg {
        Some(c) => Ok(c),
        None if (q - 2.0).abs() < 1e-12 => Ok(1.0),
        None => Err(param("bdg", format!("a BDG constant is required for q = {q}"))),
    }
}

/// `C_q^{1/q} e^{K⁻/(8δ²)}(2δ‖u‖_p + ‖Δu‖_p/(2δ))`.
pub fn lp_bound(inp: &BoundInputs, norm_u: f64, norm_lap: f64) -> Result<f64> {
    inp.validate()?;
    non_negative("norm_u", norm_u)?;
    non_negative("norm_lap", norm_lap)?;
    let q = inp.q().ok_or_else(|| param("p", "an exponent p > 1 is required"))?;
    let cq = bdg_constant(inp)?;
    let k = inp.ricci_lower.ok_or_else(|| param("ricci_lower", "a global Ricci lower bound is required"))?;
    let d = inp.delta;
    Ok(cq.powf(1.0 / q) * (neg_part(k) / (8.0 * d * d)).exp() * (2.0 * d * norm_u + norm_lap / (2.0 * d)))
}

/// `C_{p,±}`, with `sup|Z|` taken from the curvature bounds as for functions.
pub fn forms_constant(inp: &BoundInputs, sign: FormSign) -> Result<f64> {
    inp.validate()?;
    let f = inp.forms.ok_or_else(|| param("forms", "form curvature bounds are required"))?;
    let neighbour = match sign {
        FormSign::Plus => f.lower_plus,
        FormSign::Minus => f.lower_minus,
    };
    let d2 = inp.delta * inp.delta;
    let curv = f.lower + neg_part(f.upper + neighbour);
    Ok((localization_exponent(inp) + inp.r0 * inp.r0 * curv / (8.0 * d2)).exp())
}

/// `C_{p,±}(2δ/r₀ sup_D|α| + r₀/(2δ) sup_D|Δα|)`.
pub fn forms_bound(inp: &BoundInputs, sign: FormSign, sup_alpha: f64, sup_lap: f64) -> Result<f64> {
    non_negative("sup_alpha", sup_alpha)?;
    non_negative("sup_lap", sup_lap)?;
    let c = forms_constant(inp, sign)?;
    let (r0, d) = (inp.r0, inp.delta);
    Ok(c * (2.0 * d / r0 * sup_alpha + r0 / (2.0 * d) * sup_lap))
}

/// `√λ C_{p,±}^{1/λ}(2δ/r₀ + r₀/(2δ)) sup_D|α|` for `Δα = −λα`.
pub fn forms_eigen_bound(inp: &BoundInputs, sign: FormSign, sup_alpha: f64) -> Result<f64> {
    non_negative("sup_alpha", sup_alpha)?;
    let lambda = lambda_of(inp)?;
    let c = forms_constant(inp, sign)?;
    let (r0, d) = (inp.r0, inp.delta);
    Ok(lambda.sqrt() * c.powf(1.0 / lambda) * (2.0 * d / r0 + r0 / (2.0 * d)) * sup_alpha)
}

/// `c` of the preliminary gradient bound on a ball of radius `r₀`.
pub fn prelim_constant(inp: &BoundInputs) -> Result<f64> {
    inp.validate()?;
    Ok(crate::diffusion::cutoff_constant(
        inp.n,
        inp.r0,
        inp.curvature.sup_z,
        inp.curvature.k0_minus,
    ))
}

/// `sup_D|u| t^{−1/2}(c t e^{K_Z⁻t}/(1 − e^{−ct}))^{1/2}`, bounding `|dP¹_t u|`
/// and `|dP²_t u|` on `D₀`.
pub fn prelim_bound(inp: &BoundInputs, t: f64, sup_u: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(param("t", format!("must be positive, got {t}")));
    }
    non_negative("sup_u", sup_u)?;
    let c = prelim_constant(inp)?;
    let ratio = -c * t / (-c * t).exp_m1();
    Ok(sup_u / t.sqrt() * (ratio * (inp.curvature.kz_minus * t).exp()).sqrt())
}

/// `δ = (1 ∨ r₀)√(1 ∨ K⁻)`.
pub fn delta_preset(r0: f64, k_minus: f64) -> f64 {
    r0.max(1.0) * k_minus.max(1.0).sqrt()
}

/// The log-spaced δ search grid.
pub fn delta_grid() -> Vec<f64> {
    let (lo, hi) = DELTA_GRID_RANGE;
    let (a, b) = (lo.ln(), hi.ln());
    let m = DELTA_GRID_POINTS;
    (0..m).map(|i| (a + (b - a) * i as f64 / (m - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaOptimum {
    pub delta: f64,
    pub value: f64,
}

/// Smallest value of `bound` over the δ grid; ties keep the smaller δ.
pub fn minimize_over_delta(
    inp: &BoundInputs,
    bound: impl Fn(&BoundInputs) -> Result<f64>,
) -> Result<DeltaOptimum> {
    let mut best = DeltaOptimum {
        delta: f64::NAN,
        value: f64::INFINITY,
    };
    for d in delta_grid() {
        let v = bound(&inp.with_delta(d))?;
        if v < best.value {
            best = DeltaOptimum { delta: d, value: v };
        }
    }
    if best.delta.is_nan() {
        best.delta = DELTA_GRID_RANGE.0;
    }
    Ok(best)
}

/// [`main_bound`] minimized over the δ grid.
pub fn main_bound_optimal(inp: &BoundInputs, sup_u: f64, sup_lu2: f64) -> Result<DeltaOptimum> {
    minimize_over_delta(inp, |i| main_bound(i, sup_u, sup_lu2))
}
