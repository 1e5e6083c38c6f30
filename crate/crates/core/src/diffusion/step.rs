//! One step of the frame-bundle Euler scheme.
//!
//! The displacement `ξ = U(√dt·z) + Z(X)·dt` is followed along the geodesic
//! `s ↦ exp_X(sξ)`, the frame is parallel-transported along it and then
//! re-orthonormalized. `𝒬` advances by the second-order Taylor polynomial of
//! `exp(−dt/2 · A)` with `A = Ric^Z(U·, U·)` evaluated at the left point.

use nalgebra::{DMatrix, DVector};

use crate::error::{param, Error, Result};
use crate::fields::DriftField;
use crate::geometry::{Chart, ManifoldModel, ModelKind, Point};

/// Position, orthonormal frame (columns, chart components) and `𝒬`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameState {
    pub point: Point,
    pub frame: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

impl FrameState {
    /// The chart-aligned orthonormal frame at `x` with `𝒬 = id`.
    pub fn initial(model: &ManifoldModel, x: &Point) -> Result<Self> {
        model.check_point(x)?;
        let n = model.dim();
        Ok(FrameState {
            point: x.clone(),
            frame: model.orthonormal_frame(x),
            q: DMatrix::identity(n, n),
        })
    }
}

/// Flat storage of a [`FrameState`]; matrices are column-major.
#[derive(Debug, Clone)]
pub(crate) struct RawState {
    pub y: Vec<f64>,
    pub chart: Chart,
    pub u: Vec<f64>,
    pub q: Vec<f64>,
}

impl RawState {
    pub fn from_state(s: &FrameState) -> Self {
        RawState {
            y: s.point.coords.as_slice().to_vec(),
            chart: s.point.chart,
            u: s.frame.as_slice().to_vec(),
            q: s.q.as_slice().to_vec(),
        }
    }

    pub fn to_state(&self) -> FrameState {
        let n = self.y.len();
        FrameState {
            point: Point::with_chart(DVector::from_column_slice(&self.y), self.chart),
            frame: DMatrix::from_column_slice(n, n, &self.u),
            q: DMatrix::from_column_slice(n, n, &self.q),
        }
    }
}

/// Allocation-free stepping kernel with scratch buffers.
pub(crate) struct Stepper<'a> {
    model: &'a ManifoldModel,
    drift: &'a DriftField,
    n: usize,
    k: f64,
    ricci: f64,
    curved: bool,
    xi: Vec<f64>,
    z: Vec<f64>,
    m: Vec<f64>,
    t: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    amb: Vec<f64>,
    jac: Vec<f64>,
    e: Vec<f64>,
    w: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a ManifoldModel, drift: &'a DriftField) -> Self {
        let n = model.dim();
        let k = model.sectional_curvature();
        Stepper {
            model,
            drift,
            n,
            k,
            ricci: (n as f64 - 1.0) * k,
            curved: model.is_curved(),
            xi: vec![0.0; n],
            z: vec![0.0; n],
            m: vec![0.0; n * n],
            t: vec![0.0; n * n],
            a: vec![0.0; n * n],
            b: vec![0.0; n * n],
            amb: vec![0.0; n + 1],
            jac: vec![0.0; (n + 1) * n],
            e: vec![0.0; n + 1],
            w: vec![0.0; (n + 1) * n],
        }
    }

    /// Advances `cur` by one step with frame increment `db = √dt·z`, writing into `next`.
    pub fn step(&mut self, cur: &RawState, next: &mut RawState, dt: f64, db: &[f64]) -> Result<()> {
        let n = self.n;
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += cur.u[j * n + i] * db[j];
            }
            self.xi[i] = s;
        }
        if !self.drift.is_zero() {
            self.drift.value_raw(&cur.y, cur.chart, &mut self.z);
            for i in 0..n {
                self.xi[i] += self.z[i] * dt;
            }
        }
        self.advance_q(cur, next, dt);
        if self.curved {
            self.move_curved(cur, next)
        } else {
            for i in 0..n {
                next.y[i] = cur.y[i] + self.xi[i];
            }
            if let ModelKind::FlatTorus { periods } = self.model.kind() {
                for (c, l) in next.y.iter_mut().zip(periods) {
                    *c = c.rem_euclid(*l);
                }
            }
            next.chart = cur.chart;
            next.u.copy_from_slice(&cur.u);
            Ok(())
        }
    }

    fn advance_q(&mut self, cur: &RawState, next: &mut RawState, dt: f64) {
        let n = self.n;
        if self.drift.is_zero() {
            let a = self.ricci;
            let f = 1.0 - 0.5 * dt * a + 0.125 * dt * dt * a * a;
            for (o, q) in next.q.iter_mut().zip(&cur.q) {
                *o = q * f;
            }
            return;
        }
        // N = Uᵀ g (∇Z) U,  A = (n−1)K·id − (N + Nᵀ)
        self.drift.derivative_raw(&cur.y, cur.chart, &mut self.m);
        let l = if self.curved {
            2.0 / (1.0 + self.k * cur.y.iter().map(|c| c * c).sum::<f64>())
        } else {
            1.0
        };
        matmul(n, &self.m, &cur.u, &mut self.t);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for r in 0..n {
                    s += cur.u[i * n + r] * self.t[j * n + r];
                }
                self.b[j * n + i] = l * l * s;
            }
        }
        for i in 0..n {
            for j in 0..n {
                let sym = self.b[j * n + i] + self.b[i * n + j];
                self.a[j * n + i] = if i == j { self.ricci - sym } else { -sym };
            }
        }
        // B = id − dt/2 A + dt²/8 A²
        matmul(n, &self.a, &self.a, &mut self.t);
        for idx in 0..n * n {
            let diag = if idx % (n + 1) == 0 { 1.0 } else { 0.0 };
            self.b[idx] = diag - 0.5 * dt * self.a[idx] + 0.125 * dt * dt * self.t[idx];
        }
        matmul(n, &self.b, &cur.q, &mut next.q);
    }

    fn move_curved(&mut self, cur: &RawState, next: &mut RawState) -> Result<()> {
        let n = self.n;
        let k = self.k;
        let eps = if k < 0.0 { -1.0 } else { 1.0 };
        let a = 1.0 / k.abs().sqrt();
        embed(k, a, &cur.y, cur.chart, &mut self.amb);
        jacobian(k, a, &cur.y, cur.chart, &mut self.jac);
        let rows = n + 1;

        let mut len2 = 0.0;
        for r in 0..rows {
            let mut s = 0.0;
            for c in 0..n {
                s += self.jac[c * rows + r] * self.xi[c];
            }
            self.e[r] = s;
            len2 += if r == n { eps * s * s } else { s * s };
        }
        let len = len2.max(0.0).sqrt();
        if len == 0.0 {
            next.y.copy_from_slice(&cur.y);
            next.chart = cur.chart;
            next.u.copy_from_slice(&cur.u);
            return Ok(());
        }
        for v in self.e.iter_mut() {
            *v /= len;
        }
        let root = k.abs().sqrt();
        let (cc, ss) = if k > 0.0 {
            ((root * len).cos(), (root * len).sin() / root)
        } else {
            ((root * len).cosh(), (root * len).sinh() / root)
        };

        // transported frame in ambient coordinates
        for j in 0..n {
            let mut we = 0.0;
            for r in 0..rows {
                let mut s = 0.0;
                for c in 0..n {
                    s += self.jac[c * rows + r] * cur.u[j * n + c];
                }
                self.w[j * rows + r] = s;
                we += if r == n { eps * s * self.e[r] } else { s * self.e[r] };
            }
            for r in 0..rows {
                self.w[j * rows + r] += we * ((cc - 1.0) * self.e[r] - k * ss * self.amb[r]);
            }
        }
        for r in 0..rows {
            self.amb[r] = cc * self.amb[r] + ss * self.e[r];
        }

        let chart = if k > 0.0 && self.amb[n] < 0.0 {
            Chart::Antipodal
        } else {
            Chart::Primary
        };
        let scale = a / (a + chart.sign() * self.amb[n]);
        for i in 0..n {
            next.y[i] = self.amb[i] * scale;
        }
        next.chart = chart;
        let s = k * next.y.iter().map(|c| c * c).sum::<f64>();
        if !(s > -1.0) || next.y.iter().any(|c| !c.is_finite()) {
            return Err(Error::Simulation("diffusion left the Poincaré ball chart".into()));
        }

        jacobian(k, a, &next.y, chart, &mut self.jac);
        let l = 2.0 / (1.0 + s);
        for j in 0..n {
            for c in 0..n {
                let mut v = 0.0;
                for r in 0..rows {
                    let sign = if r == n { eps } else { 1.0 };
                    v += sign * self.jac[c * rows + r] * self.w[j * rows + r];
                }
                next.u[j * n + c] = v / (l * l);
            }
        }
        gram_schmidt(n, l, &mut next.u);
        Ok(())
    }
}

/// `out = a · b` for column-major `n × n` matrices.
fn matmul(n: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for j in 0..n {
        for i in 0..n {
            let mut s = 0.0;
            for r in 0..n {
                s += a[r * n + i] * b[j * n + r];
            }
            out[j * n + i] = s;
        }
    }
}

fn embed(k: f64, a: f64, y: &[f64], chart: Chart, out: &mut [f64]) {
    let n = y.len();
    let s = k * y.iter().map(|c| c * c).sum::<f64>();
    for i in 0..n {
        out[i] = 2.0 * y[i] / (1.0 + s);
    }
    out[n] = chart.sign() * a * (1.0 - s) / (1.0 + s);
}

fn jacobian(k: f64, a: f64, y: &[f64], chart: Chart, out: &mut [f64]) {
    let n = y.len();
    let rows = n + 1;
    let s = k * y.iter().map(|c| c * c).sum::<f64>();
    let d = 1.0 + s;
    for c in 0..n {
        for r in 0..n {
            let mut v = -4.0 * k * y[r] * y[c] / (d * d);
            if r == c {
                v += 2.0 / d;
            }
            out[c * rows + r] = v;
        }
        out[c * rows + n] = -4.0 * chart.sign() * a * k * y[c] / (d * d);
    }
}

/// Modified Gram–Schmidt for the conformal metric `l² δ`.
fn gram_schmidt(n: usize, l: f64, u: &mut [f64]) {
    for j in 0..n {
        for i in 0..j {
            let mut proj = 0.0;
            for r in 0..n {
                proj += u[i * n + r] * u[j * n + r];
            }
            proj *= l * l;
            for r in 0..n {
                u[j * n + r] -= proj * u[i * n + r];
            }
        }
        let norm = u[j * n..(j + 1) * n].iter().map(|v| v * v).sum::<f64>().sqrt() * l;
        for r in 0..n {
            u[j * n + r] /= norm;
        }
    }
}

/// Advances `state` by one step of length `dt` driven by the standard normal vector `noise`.
pub fn step_diffusion(
    model: &ManifoldModel,
    drift: &DriftField,
    state: &FrameState,
    dt: f64,
    noise: &DVector<f64>,
) -> Result<FrameState> {
    model.check_point(&state.point)?;
    let n = model.dim();
    if !(dt.is_finite() && dt > 0.0) {
        return Err(param("dt", format!("must be positive, got {dt}")));
    }
    if noise.len() != n || state.frame.shape() != (n, n) || state.q.shape() != (n, n) {
        return Err(param("noise", "state and noise dimensions must match the model"));
    }
    let cur = RawState::from_state(state);
    let mut next = cur.clone();
    let db: Vec<f64> = noise.iter().map(|z| z * dt.sqrt()).collect();
    Stepper::new(model, drift).step(&cur, &mut next, dt, &db)?;
    Ok(next.to_state())
}
