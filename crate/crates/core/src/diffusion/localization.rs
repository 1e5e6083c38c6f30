//! The cutoff `φ`, its constant `c(φ)` and the bounded adapted process `h`.
//!
//! On a ball `B(x, r)` the cutoff is `φ(p) = cos(πρ(x,p)/2r)`. The time change
//! `h₀(s) = ∫₀ˢ φ⁻²(X_u) du` is capped at `t`, which it reaches at `σ(t)`, and
//! `h = h₁∘h₀` with `h₁(s) = 1 − (1 − e^{−cs})/(1 − e^{−ct})`.
//!
//! On the grid, `A_{k+1} = A_k + dt·φ(X_k)⁻²` with `φ` clamped below at
//! `1e-8`, and `h_{k+1} = h₁(min(A_{k+1}, t))`. `h` is set to zero once `A`
//! reaches `t`, once the path leaves the ball, and at the last step of the
//! path, so that `h` vanishes by `σ(t) ≤ t ∧ τ`. Then `ḣ_k = (h_{k+1} − h_k)/dt`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::path::FramePath;
use crate::error::{param, Error, Result};
use crate::geometry::{Chart, CurvatureBounds, DistanceFrom, ManifoldModel, Point};

/// Lower clamp applied to `φ` before inversion.
pub const PHI_FLOOR: f64 = 1e-8;

/// `c(φ) = (π/2r)(2 sup|Z| + √((n−1)K₀⁻)) + π²(n+3)/(4r²)`.
pub fn cutoff_constant(n: usize, radius: f64, sup_z: f64, k0_minus: f64) -> f64 {
    let n = n as f64;
    PI / (2.0 * radius) * (2.0 * sup_z + ((n - 1.0) * k0_minus).sqrt()) + PI * PI * (n + 3.0) / (4.0 * radius * radius)
}

/// `c / (1 − e^{−ct})`, the bound on `E ∫₀^{t∧τ} ḣ² ds`.
pub fn h_energy_bound(c: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return f64::INFINITY;
    }
    -c / (-c * t).exp_m1()
}

/// The cutoff on `B(center, radius)`.
#[derive(Debug, Clone)]
pub struct CutoffBall {
    center: Point,
    radius: f64,
    constant: f64,
    dist: DistanceFrom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffEcho {
    pub center: Vec<f64>,
    pub radius: f64,
    pub constant: f64,
}

impl CutoffBall {
    /// `bounds` must hold on the ball (bounds over any larger set are also valid).
    pub fn new(model: &ManifoldModel, center: &Point, radius: f64, bounds: &CurvatureBounds) -> Result<Self> {
        model.check_point(center)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(param("radius", format!("cutoff radius must be positive, got {radius}")));
        }
        if radius >= model.validity_radius() {
            return Err(Error::Domain(format!(
                "ball of radius {radius} exceeds the validity radius of {}",
                model.name()
            )));
        }
        Ok(CutoffBall {
            center: center.clone(),
            radius,
            constant: cutoff_constant(model.dim(), radius, bounds.sup_z, bounds.k0_minus),
            dist: DistanceFrom::new(model, center),
        })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `c(φ)`.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn energy_bound(&self, t: f64) -> f64 {
        h_energy_bound(self.constant, t)
    }

    /// `φ(p)` for `p` in the closed ball.
    pub fn phi(&self, p: &Point) -> Result<f64> {
        let d = self.dist.distance(p.coords.as_slice(), p.chart);
        if d > self.radius * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("point at distance {d} lies outside the cutoff ball")));
        }
        Ok((PI * d / (2.0 * self.radius)).cos().max(0.0))
    }

    pub(crate) fn distance_raw(&self, y: &[f64], chart: Chart) -> f64 {
        self.dist.distance(y, chart)
    }

    pub fn echo(&self) -> CutoffEcho {
        CutoffEcho {
            center: self.center.coords.iter().copied().collect(),
            radius: self.radius,
            constant: self.constant,
        }
    }
}

/// `(φ(p), c(φ))` for the ball `B(center, radius)`.
pub fn cutoff_phi(
    model: &ManifoldModel,
    center: &Point,
    radius: f64,
    bounds: &CurvatureBounds,
    p: &Point,
) -> Result<(f64, f64)> {
    let ball = CutoffBall::new(model, center, radius, bounds)?;
    Ok((ball.phi(p)?, ball.constant()))
}

/// Streaming construction of `h` along a path.
#[derive(Debug, Clone)]
pub(crate) struct HTracker<'a> {
    ball: &'a CutoffBall,
    c: f64,
    t: f64,
    dt: f64,
    denom: f64,
    accumulated: f64,
    h: f64,
    sigma: Option<f64>,
}

impl<'a> HTracker<'a> {
    pub fn new(ball: &'a CutoffBall, t: f64, dt: f64) -> Self {
        let c = ball.constant();
        HTracker {
            ball,
            c,
            t,
            dt,
            denom: (-c * t).exp_m1(),
            accumulated: 0.0,
            h: 1.0,
            sigma: if t > 0.0 { None } else { Some(0.0) },
        }
    }

    fn h1(&self, s: f64) -> f64 {
        1.0 - (-self.c * s).exp_m1() / self.denom
    }

    /// Advances over step `k` with left point `before` and right point `after`;
    /// returns `(h_k, ḣ_k)`.
    pub fn advance(&mut self, k: usize, before: (&[f64], Chart), after: (&[f64], Chart), last: bool) -> (f64, f64) {
        let left = self.h;
        if left == 0.0 {
            return (0.0, 0.0);
        }
        let d = self.ball.distance_raw(before.0, before.1);
        let phi = (PI * d / (2.0 * self.ball.radius)).cos().max(PHI_FLOOR);
        self.accumulated += self.dt / (phi * phi);
        let outside = self.ball.distance_raw(after.0, after.1) >= self.ball.radius;
        let right = if self.accumulated >= self.t || outside || last {
            0.0
        } else {
            self.h1(self.accumulated)
        };
        if right == 0.0 {
            self.sigma = Some((k + 1) as f64 * self.dt);
        }
        self.h = right;
        (left, (right - left) / self.dt)
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }
}

/// `h` and `ḣ` sampled on a path grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationProcess {
    pub cutoff: CutoffEcho,
    pub constant: f64,
    /// Realized `σ(t)`: the first grid time with `h = 0`.
    pub sigma: f64,
    pub dt: f64,
    /// `h_k` for `k = 0..=len`.
    pub h: Vec<f64>,
    /// `ḣ_k` for `k = 0..len`.
    pub hdot: Vec<f64>,
}

impl LocalizationProcess {
    /// `Σ ḣ_k² dt`, the discrete `∫ ḣ² ds`.
    pub fn energy(&self) -> f64 {
        self.hdot.iter().map(|v| v * v).sum::<f64>() * self.dt
    }
}

/// Builds `h` for a stored path started at the ball's center.
pub fn build_h(model: &ManifoldModel, path: &FramePath, ball: &CutoffBall, t: f64) -> Result<LocalizationProcess> {
    let start = path
        .positions
        .first()
        .ok_or_else(|| Error::Consistency("empty path".into()))?;
    if model.distance(start, ball.center())? > 1e-12 {
        return Err(Error::Consistency("path does not start at the cutoff ball's center".into()));
    }
    if (path.horizon - t).abs() > 1e-12 * t.max(1.0) {
        return Err(Error::Consistency(format!(
            "path horizon {} does not match t = {t}",
            path.horizon
        )));
    }
    let mut tracker = HTracker::new(ball, t, path.dt);
    let len = path.len();
    let mut h = Vec::with_capacity(len + 1);
    let mut hdot = Vec::with_capacity(len);
    for k in 0..len {
        let (a, b) = (&path.positions[k], &path.positions[k + 1]);
        let (hk, dk) = tracker.advance(k, (a.coords.as_slice(), a.chart), (b.coords.as_slice(), b.chart), k + 1 == len);
        h.push(hk);
        hdot.push(dk);
    }
    h.push(if len == 0 { 1.0 } else { tracker.h });
    Ok(LocalizationProcess {
        cutoff: ball.echo(),
        constant: ball.constant(),
        sigma: tracker.sigma().unwrap_or(0.0),
        dt: path.dt,
        h,
        hdot,
    })
}
