//! Constant-curvature manifold models in conformally flat charts.
//!
//! Every built-in model is written in a chart where the metric is
//! `g = λ(y)² δ`:
//!
//! | model            | chart                              | λ(y)              |
//! |------------------|------------------------------------|-------------------|
//! | Euclidean ℝⁿ     | identity                           | 1                 |
//! | flat torus       | covering chart, wrapped per period | 1                 |
//! | sphere radius a  | stereographic, two charts          | 2 / (1 + K\|y\|²) |
//! | hyperbolic −κ    | Poincaré ball of radius 1/√κ       | 2 / (1 + K\|y\|²) |
//!
//! with `K` the sectional curvature (`1/a²` or `−κ`). The sphere uses the
//! projection from the south pole ([`Chart::Primary`], covers the northern
//! hemisphere) and from the north pole ([`Chart::Antipodal`]); the transition
//! is the inversion `y ↦ y / (K|y|²)`, which is an isometry between the two
//! chart metrics.
//!
//! The curved models also embed into an ambient quadric `⟨p, p⟩_ε = 1/K` of
//! `ℝⁿ⁺¹` (Euclidean for the sphere, Minkowski for the hyperboloid) with
//! `p = (2y / (1+s), σ a (1−s)/(1+s))`, `s = K|y|²`, `σ = ±1` the chart sign.
//! Geodesics and parallel transport have closed forms there.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Which stereographic chart a point is expressed in. Only the sphere uses
/// [`Chart::Antipodal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    #[default]
    Primary,
    Antipodal,
}

impl Chart {
    pub(crate) fn sign(self) -> f64 {
        match self {
            Chart::Primary => 1.0,
            Chart::Antipodal => -1.0,
        }
    }

    fn flipped(self) -> Chart {
        match self {
            Chart::Primary => Chart::Antipodal,
            Chart::Antipodal => Chart::Primary,
        }
    }
}

/// A point in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub coords: DVector<f64>,
    pub chart: Chart,
}

impl Point {
    pub fn new(coords: DVector<f64>) -> Self {
        Point {
            coords,
            chart: Chart::Primary,
        }
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Point::new(DVector::from_column_slice(coords))
    }

    pub fn with_chart(coords: DVector<f64>, chart: Chart) -> Self {
        Point { coords, chart }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Euclidean,
    Sphere { radius: f64 },
    /// Constant sectional curvature `−curvature`.
    Hyperbolic { curvature: f64 },
    FlatTorus { periods: Vec<f64> },
}

/// Christoffel symbols `Γ^k_{ij}`, stored as `data[(k·n + i)·n + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(n: usize) -> Self {
        Christoffel {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, value: f64) {
        let n = self.n;
        self.data[(k * n + i) * n + j] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Riemann tensor `R^l_{ijk}` with `R(∂_j, ∂_k)∂_i = R^l_{ijk} ∂_l`,
/// stored as `data[((l·n + i)·n + j)·n + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    n: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn zeros(n: usize) -> Self {
        Riemann {
            n,
            data: vec![0.0; n.pow(4)],
        }
    }

    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let n = self.n;
        self.data[((l * n + i) * n + j) * n + k]
    }

    pub fn set(&mut self, l: usize, i: usize, j: usize, k: usize, value: f64) {
        let n = self.n;
        self.data[((l * n + i) * n + j) * n + k] = value;
    }

    /// `Ric_{ik} = R^l_{ilk}`.
    pub fn ricci(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, k| (0..n).map(|l| self.get(l, i, l, k)).sum())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// A manifold model: dimension, kind and the chart evaluators built on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldModel {
    dim: usize,
    kind: ModelKind,
}

/// Geodesic arc length per RK4 substep, in units of the model's length scale.
const RK4_STEP: f64 = 1e-3;

impl ManifoldModel {
    pub fn new(dim: usize, kind: ModelKind) -> Result<Self> {
        if dim == 0 {
            return Err(param("dim", "dimension must be positive"));
        }
        match &kind {
            ModelKind::Euclidean => {}
            ModelKind::Sphere { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(param("radius", format!("must be positive, got {radius}")));
                }
            }
            ModelKind::Hyperbolic { curvature } => {
                if !(curvature.is_finite() && *curvature > 0.0) {
                    return Err(param(
                        "curvature",
                        format!("curvature magnitude must be positive, got {curvature}"),
                    ));
                }
            }
            ModelKind::FlatTorus { periods } => {
                if periods.len() != dim {
                    return Err(param(
                        "periods",
                        format!("expected {dim} periods, got {}", periods.len()),
                    ));
                }
                if periods.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                    return Err(param("periods", "periods must be positive"));
                }
            }
        }
        Ok(ManifoldModel { dim, kind })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(dim, ModelKind::Euclidean).expect("valid euclidean model")
    }

    pub fn unit_sphere(dim: usize) -> Self {
        Self::new(dim, ModelKind::Sphere { radius: 1.0 }).expect("valid sphere model")
    }

    pub fn hyperbolic(dim: usize, curvature: f64) -> Result<Self> {
        Self::new(dim, ModelKind::Hyperbolic { curvature })
    }

    pub fn flat_torus(periods: Vec<f64>) -> Result<Self> {
        Self::new(periods.len(), ModelKind::FlatTorus { periods })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn name(&self) -> String {
        match &self.kind {
            ModelKind::Euclidean => format!("euclidean{}", self.dim),
            ModelKind::Sphere { radius } => format!("sphere{}(r={radius})", self.dim),
            ModelKind::Hyperbolic { curvature } => format!("hyperbolic{}(k={curvature})", self.dim),
            ModelKind::FlatTorus { periods } => format!("torus{}({periods:?})", self.dim),
        }
    }

    /// Sectional curvature `K`.
    pub fn sectional_curvature(&self) -> f64 {
        match &self.kind {
            ModelKind::Sphere { radius } => 1.0 / (radius * radius),
            ModelKind::Hyperbolic { curvature } => -curvature,
            _ => 0.0,
        }
    }

    pub(crate) fn is_curved(&self) -> bool {
        matches!(self.kind, ModelKind::Sphere { .. } | ModelKind::Hyperbolic { .. })
    }

    /// Intrinsic length scale: radius, `1/√κ`, or 1 for flat models.
    pub fn length_scale(&self) -> f64 {
        match &self.kind {
            ModelKind::Sphere { radius } => *radius,
            ModelKind::Hyperbolic { curvature } => 1.0 / curvature.sqrt(),
            _ => 1.0,
        }
    }

    /// Geodesic balls of radius below this value are embedded balls in the
    /// model (`π·a` on the sphere, half the shortest period on the torus).
    pub fn validity_radius(&self) -> f64 {
        match &self.kind {
            ModelKind::Sphere { radius } => std::f64::consts::PI * radius,
            ModelKind::FlatTorus { periods } => 0.5 * periods.iter().cloned().fold(f64::INFINITY, f64::min),
            _ => f64::INFINITY,
        }
    }

    pub fn is_compact(&self) -> bool {
        matches!(self.kind, ModelKind::Sphere { .. } | ModelKind::FlatTorus { .. })
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim {
            return Err(Error::Domain(format!(
                "point has {} coordinates, model dimension is {}",
                p.dim(),
                self.dim
            )));
        }
        if p.coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite chart coordinates".into()));
        }
        if p.chart == Chart::Antipodal && !matches!(self.kind, ModelKind::Sphere { .. }) {
            return Err(Error::Domain("antipodal chart is only defined for the sphere".into()));
        }
        if let ModelKind::Hyperbolic { curvature } = self.kind {
            if curvature * p.coords.norm_squared() >= 1.0 {
                return Err(Error::Domain("point outside the Poincaré ball".into()));
            }
        }
        Ok(())
    }

    /// Conformal factor `λ` with `g = λ² δ`.
    pub fn conformal_factor(&self, p: &Point) -> f64 {
        if self.is_curved() {
            2.0 / (1.0 + self.sectional_curvature() * p.coords.norm_squared())
        } else {
            1.0
        }
    }

    /// Gradient of `ln λ` in chart coordinates.
    fn log_factor_grad(&self, p: &Point) -> DVector<f64> {
        if self.is_curved() {
            let k = self.sectional_curvature();
            let lambda = self.conformal_factor(p);
            &p.coords * (-k * lambda)
        } else {
            DVector::zeros(self.dim)
        }
    }

    pub fn metric(&self, p: &Point) -> Result<DMatrix<f64>> {
        self.check_point(p)?;
        let l = self.conformal_factor(p);
        Ok(DMatrix::identity(self.dim, self.dim) * (l * l))
    }

    pub fn inner(&self, p: &Point, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        let l = self.conformal_factor(p);
        l * l * v.dot(w)
    }

    pub fn norm(&self, p: &Point, v: &DVector<f64>) -> f64 {
        self.conformal_factor(p) * v.norm()
    }

    /// Norm of a covector given by its chart components.
    pub fn covector_norm(&self, p: &Point, w: &DVector<f64>) -> f64 {
        w.norm() / self.conformal_factor(p)
    }

    pub fn christoffel(&self, p: &Point) -> Result<Christoffel> {
        self.check_point(p)?;
        let n = self.dim;
        let mut gamma = Christoffel::zeros(n);
        if !self.is_curved() {
            return Ok(gamma);
        }
        // Γ^k_ij = δ_ik ∂_j f + δ_jk ∂_i f − δ_ij ∂_k f with f = ln λ.
        let df = self.log_factor_grad(p);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    if i == k {
                        v += df[j];
                    }
                    if j == k {
                        v += df[i];
                    }
                    if i == j {
                        v -= df[k];
                    }
                    gamma.set(k, i, j, v);
                }
            }
        }
        Ok(gamma)
    }

    /// `Γ(v, w)^k = Γ^k_ij v^i w^j` without materialising the tensor.
    fn christoffel_contract(&self, df: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let vf = v.dot(df);
        let wf = w.dot(df);
        let vw = v.dot(w);
        v * wf + w * vf - df * vw
    }

    pub fn riemann(&self, p: &Point) -> Result<Riemann> {
        let g = self.metric(p)?;
        let n = self.dim;
        let k = self.sectional_curvature();
        let mut r = Riemann::zeros(n);
        if k == 0.0 {
            return Ok(r);
        }
        // R(X,Y)Z = K (g(Y,Z) X − g(X,Z) Y)
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for kk in 0..n {
                        let mut v = 0.0;
                        if l == j {
                            v += g[(kk, i)];
                        }
                        if l == kk {
                            v -= g[(j, i)];
                        }
                        r.set(l, i, j, kk, k * v);
                    }
                }
            }
        }
        Ok(r)
    }

    pub fn ricci(&self, p: &Point) -> Result<DMatrix<f64>> {
        let g = self.metric(p)?;
        Ok(g * ((self.dim as f64 - 1.0) * self.sectional_curvature()))
    }

    pub fn ricci_quadratic(&self, p: &Point, v: &DVector<f64>) -> Result<f64> {
        self.check_point(p)?;
        if v.len() != self.dim {
            return Err(Error::Domain("tangent vector has the wrong dimension".into()));
        }
        let nv = self.norm(p, v);
        Ok((self.dim as f64 - 1.0) * self.sectional_curvature() * nv * nv)
    }

    /// The chart-aligned orthonormal frame `I / λ`.
    pub fn orthonormal_frame(&self, p: &Point) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim) / self.conformal_factor(p)
    }

    /// Modified Gram–Schmidt on the columns of `frame` with respect to `g_p`.
    pub fn orthonormalize(&self, p: &Point, frame: &mut DMatrix<f64>) {
        // With a conformal metric, g-orthonormality is Euclidean orthogonality
        // with column norms 1/λ.
        let l = self.conformal_factor(p);
        let cols = frame.ncols();
        for j in 0..cols {
            for i in 0..j {
                let proj = frame.column(i).dot(&frame.column(j)) * l * l;
                let ci = frame.column(i).clone_owned();
                frame.column_mut(j).axpy(-proj, &ci, 1.0);
            }
            let nrm = frame.column(j).norm() * l;
            frame.column_mut(j).scale_mut(1.0 / nrm);
        }
    }

    /// Maps torus coordinates into the fundamental domain; identity elsewhere.
    pub fn normalize(&self, mut p: Point) -> Point {
        if let ModelKind::FlatTorus { periods } = &self.kind {
            for (c, l) in p.coords.iter_mut().zip(periods) {
                *c = c.rem_euclid(*l);
            }
        }
        p
    }

    pub(crate) fn radius_parameter(&self) -> f64 {
        1.0 / self.sectional_curvature().abs().sqrt()
    }

    /// Ambient embedding of a point of a curved model (the point itself for flat models).
    pub fn embed(&self, p: &Point) -> DVector<f64> {
        if !self.is_curved() {
            return p.coords.clone();
        }
        let n = self.dim;
        let k = self.sectional_curvature();
        let a = self.radius_parameter();
        let s = k * p.coords.norm_squared();
        let mut out = DVector::zeros(n + 1);
        for i in 0..n {
            out[i] = 2.0 * p.coords[i] / (1.0 + s);
        }
        out[n] = p.chart.sign() * a * (1.0 - s) / (1.0 + s);
        out
    }

    /// Jacobian of [`Self::embed`]: an `(n+1) × n` matrix whose columns are the
    /// ambient images of the coordinate vectors.
    pub fn embedding_jacobian(&self, p: &Point) -> DMatrix<f64> {
        let n = self.dim;
        if !self.is_curved() {
            return DMatrix::identity(n, n);
        }
        let k = self.sectional_curvature();
        let a = self.radius_parameter();
        let y = &p.coords;
        let s = k * y.norm_squared();
        let d = 1.0 + s;
        let mut j = DMatrix::zeros(n + 1, n);
        for c in 0..n {
            for r in 0..n {
                let mut v = -4.0 * k * y[r] * y[c] / (d * d);
                if r == c {
                    v += 2.0 / d;
                }
                j[(r, c)] = v;
            }
            j[(n, c)] = -4.0 * p.chart.sign() * a * k * y[c] / (d * d);
        }
        j
    }

    /// Sign of the extra ambient coordinate in the quadric form.
    pub(crate) fn ambient_sign(&self) -> f64 {
        if self.sectional_curvature() < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    fn ambient_inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let n = self.dim;
        let mut s = 0.0;
        for i in 0..n {
            s += u[i] * v[i];
        }
        s + self.ambient_sign() * u[n] * v[n]
    }

    /// Inverse of [`Self::embed`]; on the sphere picks the chart of the hemisphere containing `q`.
    pub fn from_embedding(&self, q: &DVector<f64>) -> Point {
        if !self.is_curved() {
            return self.normalize(Point::new(q.clone()));
        }
        let n = self.dim;
        let a = self.radius_parameter();
        let chart = if self.sectional_curvature() > 0.0 && q[n] < 0.0 {
            Chart::Antipodal
        } else {
            Chart::Primary
        };
        let scale = a / (a + chart.sign() * q[n]);
        Point::with_chart(q.rows(0, n) * scale, chart)
    }

    /// Ambient vectors tangent at `p` back to chart components.
    fn ambient_to_chart(&self, p: &Point, jac: &DMatrix<f64>, w: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        let l = self.conformal_factor(p);
        let eps = self.ambient_sign();
        DVector::from_fn(n, |i, _| {
            let mut s = 0.0;
            for r in 0..n {
                s += jac[(r, i)] * w[r];
            }
            s += eps * jac[(n, i)] * w[n];
            s / (l * l)
        })
    }

    /// Geodesic distance.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check_point(p)?;
        self.check_point(q)?;
        Ok(self.distance_unchecked(p, q))
    }

    pub(crate) fn distance_unchecked(&self, p: &Point, q: &Point) -> f64 {
        match &self.kind {
            ModelKind::Euclidean => (&p.coords - &q.coords).norm(),
            ModelKind::FlatTorus { periods } => {
                let mut s = 0.0;
                for ((a, b), l) in p.coords.iter().zip(q.coords.iter()).zip(periods) {
                    let d = (a - b).rem_euclid(*l);
                    let d = d.min(l - d);
                    s += d * d;
                }
                s.sqrt()
            }
            ModelKind::Sphere { .. } | ModelKind::Hyperbolic { .. } => {
                let a = self.radius_parameter();
                let diff = self.embed(p) - self.embed(q);
                let chord = self.ambient_inner(&diff, &diff).max(0.0).sqrt() / (2.0 * a);
                if self.sectional_curvature() > 0.0 {
                    2.0 * a * chord.min(1.0).asin()
                } else {
                    2.0 * a * chord.asinh()
                }
            }
        }
    }

    /// Geodesic `s ↦ exp_p(s v)` for `s ∈ [0, 1]` with parallel transport of the
    /// columns of `vectors`, in closed form.
    pub fn exp_closed_form(
        &self,
        p: &Point,
        v: &DVector<f64>,
        vectors: &DMatrix<f64>,
    ) -> Result<(Point, DMatrix<f64>)> {
        self.check_point(p)?;
        if v.len() != self.dim || vectors.nrows() != self.dim {
            return Err(Error::Domain("tangent data has the wrong dimension".into()));
        }
        Ok(self.exp_closed_form_unchecked(p, v, vectors))
    }

    pub(crate) fn exp_closed_form_unchecked(
        &self,
        p: &Point,
        v: &DVector<f64>,
        vectors: &DMatrix<f64>,
    ) -> (Point, DMatrix<f64>) {
        if !self.is_curved() {
            let q = self.normalize(Point::with_chart(&p.coords + v, p.chart));
            return (q, vectors.clone());
        }
        let k = self.sectional_curvature();
        let amb = self.embed(p);
        let jac = self.embedding_jacobian(p);
        let x = &jac * v;
        let len = self.ambient_inner(&x, &x).max(0.0).sqrt();
        if len == 0.0 {
            return (p.clone(), vectors.clone());
        }
        let e = &x / len;
        let root = k.abs().sqrt();
        let (c, s) = if k > 0.0 {
            ((root * len).cos(), (root * len).sin() / root)
        } else {
            ((root * len).cosh(), (root * len).sinh() / root)
        };
        let q_amb = &amb * c + &e * s;
        let q = self.from_embedding(&q_amb);
        let jac_q = self.embedding_jacobian(&q);
        let mut out = DMatrix::zeros(self.dim, vectors.ncols());
        for col in 0..vectors.ncols() {
            let w = &jac * vectors.column(col);
            let we = self.ambient_inner(&w, &e);
            let moved = &w + (&e * (c - 1.0) - &amb * (k * s)) * we;
            out.set_column(col, &self.ambient_to_chart(&q, &jac_q, &moved));
        }
        (q, out)
    }

    /// Inversion onto the other sphere chart, applied to a point and tangent data.
    fn flip_chart(&self, y: &mut Point, tangents: &mut [&mut DVector<f64>]) {
        let k = self.sectional_curvature();
        let r2 = y.coords.norm_squared();
        let s = k * r2;
        let u = &y.coords / r2.sqrt();
        for t in tangents.iter_mut() {
            let proj = u.dot(t);
            let reflected = &**t - &u * (2.0 * proj);
            **t = reflected / s;
        }
        y.coords /= s;
        y.chart = y.chart.flipped();
    }

    /// Integrates the geodesic and parallel-transport equations with fixed-step
    /// RK4 (arc length per step at most `1e-3` times the length scale). The
    /// transported vectors are returned as integrated, without re-orthonormalization.
    pub fn geodesic_transport(
        &self,
        p: &Point,
        v: &DVector<f64>,
        vectors: &DMatrix<f64>,
    ) -> Result<(Point, DMatrix<f64>)> {
        self.check_point(p)?;
        if v.len() != self.dim || vectors.nrows() != self.dim {
            return Err(Error::Domain("tangent data has the wrong dimension".into()));
        }
        if !self.is_curved() {
            return Ok(self.exp_closed_form_unchecked(p, v, vectors));
        }
        let speed = self.norm(p, v);
        let substeps = ((speed / (RK4_STEP * self.length_scale())).ceil() as usize).max(1);
        let h = 1.0 / substeps as f64;
        let cols = vectors.ncols();
        let mut y = p.clone();
        let mut vel = v.clone();
        let mut ws: Vec<DVector<f64>> = (0..cols).map(|c| vectors.column(c).clone_owned()).collect();

        // state derivative: (ẏ, v̇, ẇ) = (v, −Γ(v,v), −Γ(v,w))
        let deriv = |pt: &Point, vel: &DVector<f64>, ws: &[DVector<f64>]| {
            let df = self.log_factor_grad(pt);
            let acc = -self.christoffel_contract(&df, vel, vel);
            let dws: Vec<DVector<f64>> = ws.iter().map(|w| -self.christoffel_contract(&df, vel, w)).collect();
            (vel.clone(), acc, dws)
        };
        let shifted = |base: &Point, dy: &DVector<f64>, f: f64| Point::with_chart(&base.coords + dy * f, base.chart);
        let add = |a: &[DVector<f64>], b: &[DVector<f64>], f: f64| -> Vec<DVector<f64>> {
            a.iter().zip(b).map(|(x, y)| x + y * f).collect()
        };

        for _ in 0..substeps {
            let (k1y, k1v, k1w) = deriv(&y, &vel, &ws);
            let (k2y, k2v, k2w) = deriv(&shifted(&y, &k1y, h / 2.0), &(&vel + &k1v * (h / 2.0)), &add(&ws, &k1w, h / 2.0));
            let (k3y, k3v, k3w) = deriv(&shifted(&y, &k2y, h / 2.0), &(&vel + &k2v * (h / 2.0)), &add(&ws, &k2w, h / 2.0));
            let (k4y, k4v, k4w) = deriv(&shifted(&y, &k3y, h), &(&vel + &k3v * h), &add(&ws, &k3w, h));
            y.coords += (k1y + k2y * 2.0 + k3y * 2.0 + k4y) * (h / 6.0);
            vel += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
            for (c, w) in ws.iter_mut().enumerate() {
                *w += (&k1w[c] + &k2w[c] * 2.0 + &k3w[c] * 2.0 + &k4w[c]) * (h / 6.0);
            }
            let s = self.sectional_curvature() * y.coords.norm_squared();
            if self.sectional_curvature() > 0.0 && s > 2.0 {
                let mut tangents: Vec<&mut DVector<f64>> = Vec::with_capacity(cols + 1);
                tangents.push(&mut vel);
                tangents.extend(ws.iter_mut());
                self.flip_chart(&mut y, &mut tangents);
            } else if s <= -1.0 || y.coords.iter().any(|c| !c.is_finite()) {
                return Err(Error::Domain("geodesic left the chart".into()));
            }
        }

        // Report the endpoint in the chart of its hemisphere.
        if self.sectional_curvature() > 0.0 && self.sectional_curvature() * y.coords.norm_squared() > 1.0 {
            let mut tangents: Vec<&mut DVector<f64>> = ws.iter_mut().collect();
            self.flip_chart(&mut y, &mut tangents);
        }
        let mut out = DMatrix::zeros(self.dim, cols);
        for (c, w) in ws.iter().enumerate() {
            out.set_column(c, w);
        }
        Ok((y, out))
    }

    /// `exp_p(v)` by RK4 integration, transporting and re-orthonormalizing `frame`.
    pub fn exp_map(&self, p: &Point, v: &DVector<f64>, frame: &DMatrix<f64>) -> Result<(Point, DMatrix<f64>)> {
        let (q, mut f) = self.geodesic_transport(p, v, frame)?;
        self.orthonormalize(&q, &mut f);
        Ok((q, f))
    }

    /// Point of the sphere model with polar angle `theta` measured from the
    /// north pole and azimuth `phi` (only the first two ambient axes are used
    /// when `n > 2`).
    pub fn sphere_point_polar(&self, theta: f64, phi: f64) -> Result<Point> {
        match self.kind {
            ModelKind::Sphere { radius } => {
                let n = self.dim;
                let mut amb = DVector::zeros(n + 1);
                amb[n] = radius * theta.cos();
                if n >= 2 {
                    amb[0] = radius * theta.sin() * phi.cos();
                    amb[1] = radius * theta.sin() * phi.sin();
                } else {
                    amb[0] = radius * theta.sin();
                }
                Ok(self.from_embedding(&amb))
            }
            _ => Err(Error::Domain("polar coordinates are only defined on the sphere".into())),
        }
    }
}

/// Allocation-free evaluation of `ρ(center, ·)` for the hot simulation loop.
#[derive(Debug, Clone)]
pub(crate) struct DistanceFrom {
    model: ManifoldModel,
    center: Vec<f64>,
    ambient: Vec<f64>,
}

impl DistanceFrom {
    pub(crate) fn new(model: &ManifoldModel, center: &Point) -> Self {
        DistanceFrom {
            model: model.clone(),
            center: center.coords.iter().copied().collect(),
            ambient: model.embed(center).iter().copied().collect(),
        }
    }

    pub(crate) fn distance(&self, y: &[f64], chart: Chart) -> f64 {
        match &self.model.kind {
            ModelKind::Euclidean => y
                .iter()
                .zip(&self.center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            ModelKind::FlatTorus { periods } => {
                let mut s = 0.0;
                for ((a, b), l) in y.iter().zip(&self.center).zip(periods) {
                    let d = (a - b).rem_euclid(*l);
                    let d = d.min(l - d);
                    s += d * d;
                }
                s.sqrt()
            }
            _ => {
                let k = self.model.sectional_curvature();
                let a = self.model.radius_parameter();
                let n = y.len();
                let s = k * y.iter().map(|c| c * c).sum::<f64>();
                let mut q = 0.0;
                for i in 0..n {
                    let d = 2.0 * y[i] / (1.0 + s) - self.ambient[i];
                    q += d * d;
                }
                let d = chart.sign() * a * (1.0 - s) / (1.0 + s) - self.ambient[n];
                q += self.model.ambient_sign() * d * d;
                let chord = q.max(0.0).sqrt() / (2.0 * a);
                if k > 0.0 {
                    2.0 * a * chord.min(1.0).asin()
                } else {
                    2.0 * a * chord.asinh()
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn hyperbolic_plane() -> ManifoldModel {
        ManifoldModel::hyperbolic(2, 1.0).unwrap()
    }

    #[test]
    fn flat_christoffel_vanishes() {
        let e = ManifoldModel::euclidean(2);
        let g = e.christoffel(&Point::from_slice(&[0.3, -1.2])).unwrap();
        assert!(g.as_slice().iter().all(|v| *v == 0.0));
        let t = ManifoldModel::flat_torus(vec![2.0 * PI, 2.0 * PI]).unwrap();
        let g = t.christoffel(&Point::from_slice(&[1.0, 5.0])).unwrap();
        assert!(g.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn christoffel_symmetric_in_lower_indices() {
        let s = ManifoldModel::unit_sphere(3);
        let g = s.christoffel(&Point::from_slice(&[0.3, -0.2, 0.5])).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(g.get(k, i, j), g.get(k, j, i));
                }
            }
        }
    }

    #[test]
    fn ricci_constant_curvature_values() {
        let s = ManifoldModel::unit_sphere(2);
        let p = Point::from_slice(&[0.4, 0.1]);
        let v = DVector::from_column_slice(&[1.0, 0.0]) / s.conformal_factor(&p);
        assert_relative_eq!(s.ricci_quadratic(&p, &v).unwrap(), 1.0, epsilon = 1e-14);

        let t = ManifoldModel::flat_torus(vec![2.0 * PI, 2.0 * PI]).unwrap();
        let p = Point::from_slice(&[1.0, 2.0]);
        assert_eq!(t.ricci_quadratic(&p, &DVector::from_column_slice(&[3.0, -1.0])).unwrap(), 0.0);

        let h = hyperbolic_plane();
        let p = Point::from_slice(&[0.2, -0.3]);
        let v = DVector::from_column_slice(&[0.6, 0.8]) / h.conformal_factor(&p);
        assert_relative_eq!(h.ricci_quadratic(&p, &v).unwrap(), -1.0, epsilon = 1e-14);
    }

    #[test]
    fn riemann_contracts_to_ricci() {
        let h = ManifoldModel::hyperbolic(3, 0.5).unwrap();
        let p = Point::from_slice(&[0.3, 0.1, -0.4]);
        let ric = h.riemann(&p).unwrap().ricci();
        let expected = h.ricci(&p).unwrap();
        assert!((ric - expected).amax() < 1e-13);
    }

    #[test]
    fn invalid_points_are_rejected() {
        let h = hyperbolic_plane();
        assert!(matches!(h.christoffel(&Point::from_slice(&[0.9, 0.5])), Err(Error::Domain(_))));
        let e = ManifoldModel::euclidean(2);
        assert!(e.metric(&Point::from_slice(&[f64::NAN, 0.0])).is_err());
        assert!(e.metric(&Point::from_slice(&[1.0])).is_err());
    }

    #[test]
    fn embedding_jacobian_pulls_back_metric() {
        for m in [ManifoldModel::unit_sphere(2), hyperbolic_plane()] {
            for chart in [Chart::Primary, Chart::Antipodal] {
                if chart == Chart::Antipodal && m.sectional_curvature() < 0.0 {
                    continue;
                }
                let p = Point::with_chart(DVector::from_column_slice(&[0.3, -0.5]), chart);
                let j = m.embedding_jacobian(&p);
                let l = m.conformal_factor(&p);
                for a in 0..2 {
                    for b in 0..2 {
                        let ja = j.column(a).clone_owned();
                        let jb = j.column(b).clone_owned();
                        let expect = if a == b { l * l } else { 0.0 };
                        assert_relative_eq!(m.ambient_inner(&ja, &jb), expect, epsilon = 1e-12);
                    }
                }
                let back = m.from_embedding(&m.embed(&p));
                assert_eq!(back.chart, if m.sectional_curvature() > 0.0 { chart } else { Chart::Primary });
                assert!((back.coords - &p.coords).amax() < 1e-14);
            }
        }
    }

    #[test]
    fn exp_euclidean_is_translation() {
        let e = ManifoldModel::euclidean(2);
        let p = Point::from_slice(&[1.0, 2.0]);
        let v = DVector::from_column_slice(&[0.5, -3.0]);
        let (q, f) = e.exp_map(&p, &v, &e.orthonormal_frame(&p)).unwrap();
        assert_eq!(q.coords, DVector::from_column_slice(&[1.5, -1.0]));
        assert_eq!(f, DMatrix::identity(2, 2));
    }

    #[test]
    fn exp_torus_wraps() {
        let t = ManifoldModel::flat_torus(vec![2.0 * PI, 2.0 * PI]).unwrap();
        let p = Point::from_slice(&[6.0, 0.5]);
        let v = DVector::from_column_slice(&[1.0, -1.0]);
        let (q, _) = t.exp_map(&p, &v, &t.orthonormal_frame(&p)).unwrap();
        assert_relative_eq!(q.coords[0], 7.0 - 2.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(q.coords[1], 2.0 * PI - 0.5, epsilon = 1e-14);
    }

    #[test]
    fn exp_from_north_pole_reaches_equator() {
        let s = ManifoldModel::unit_sphere(2);
        let north = Point::from_slice(&[0.0, 0.0]);
        // unit speed at the pole: λ = 2, so chart speed 1/2 per unit length
        let v = DVector::from_column_slice(&[PI / 4.0, 0.0]);
        let (q, frame) = s.exp_map(&north, &v, &s.orthonormal_frame(&north)).unwrap();
        let amb = s.embed(&q);
        assert!(amb[2].abs() < 1e-10, "height {}", amb[2]);
        assert_relative_eq!(s.distance(&north, &q).unwrap(), PI / 2.0, epsilon = 1e-10);
        let gram = frame.transpose() * s.metric(&q).unwrap() * &frame;
        assert!((gram - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn rk4_matches_closed_form_across_chart_flip() {
        let s = ManifoldModel::unit_sphere(2);
        let p = Point::from_slice(&[0.2, 0.1]);
        let v = DVector::from_column_slice(&[1.1, 0.4]);
        let frame = s.orthonormal_frame(&p);
        let (q1, f1) = s.geodesic_transport(&p, &v, &frame).unwrap();
        let (q2, f2) = s.exp_closed_form(&p, &v, &frame).unwrap();
        assert_eq!(q1.chart, Chart::Antipodal);
        assert_eq!(q1.chart, q2.chart);
        assert!((&q1.coords - &q2.coords).amax() < 1e-9);
        assert!((f1 - f2).amax() < 1e-9);

        let h = hyperbolic_plane();
        let p = Point::from_slice(&[0.3, -0.2]);
        let v = DVector::from_column_slice(&[0.4, 0.5]);
        let frame = h.orthonormal_frame(&p);
        let (q1, f1) = h.geodesic_transport(&p, &v, &frame).unwrap();
        let (q2, f2) = h.exp_closed_form(&p, &v, &frame).unwrap();
        assert!((&q1.coords - &q2.coords).amax() < 1e-9);
        assert!((f1 - f2).amax() < 1e-9);
    }

    #[test]
    fn torus_distance_uses_shortest_image() {
        let t = ManifoldModel::flat_torus(vec![2.0 * PI, 2.0 * PI]).unwrap();
        let d = t
            .distance(&Point::from_slice(&[0.0, 0.0]), &Point::from_slice(&[1.5 * PI, 0.0]))
            .unwrap();
        assert_relative_eq!(d, PI / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn sphere_distance_is_great_circle() {
        let s = ManifoldModel::unit_sphere(2);
        let p = s.sphere_point_polar(0.3, 0.2).unwrap();
        let q = s.sphere_point_polar(2.5, -1.0).unwrap();
        let (pa, qa) = (s.embed(&p), s.embed(&q));
        assert_relative_eq!(s.distance(&p, &q).unwrap(), pa.dot(&qa).acos(), epsilon = 1e-12);
    }

    #[test]
    fn hyperbolic_distance_from_origin() {
        let h = ManifoldModel::hyperbolic(2, 4.0).unwrap();
        let o = Point::from_slice(&[0.0, 0.0]);
        let p = Point::from_slice(&[0.3, 0.0]);
        // r = (2/√κ) artanh(√κ |y|)
        assert_relative_eq!(h.distance(&o, &p).unwrap(), (0.6f64).atanh(), epsilon = 1e-13);
    }

    #[test]
    fn gram_schmidt_produces_orthonormal_frame() {
        let h = hyperbolic_plane();
        let p = Point::from_slice(&[0.5, 0.1]);
        let mut f = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.2, 2.0]);
        h.orthonormalize(&p, &mut f);
        let gram = f.transpose() * h.metric(&p).unwrap() * &f;
        assert!((gram - DMatrix::identity(2, 2)).amax() < 1e-14);
    }
}
