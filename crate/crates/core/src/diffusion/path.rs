use std::io::Write;

use nalgebra::{DMatrix, DVector};

use super::rng::NoiseStream;
use super::step::{FrameState, RawState, Stepper};
use crate::error::{param, Error, Result};
use crate::fields::DriftField;
use crate::geometry::{Chart, DistanceFrom, DomainSpec, ManifoldModel, Point};

/// Borrowed view of a state inside the simulation loop.
#[derive(Debug, Clone, Copy)]
pub struct StateView<'a> {
    pub coords: &'a [f64],
    pub chart: Chart,
    /// Column-major orthonormal frame.
    pub frame: &'a [f64],
    /// Column-major `𝒬`.
    pub q: &'a [f64],
}

impl StateView<'_> {
    pub fn point(&self) -> Point {
        Point::with_chart(DVector::from_column_slice(self.coords), self.chart)
    }
}

/// One step `k → k+1` of a path, handed to the visitor of [`Simulator::run_path`].
#[derive(Debug, Clone, Copy)]
pub struct StepView<'a> {
    pub index: usize,
    /// Time `t_k` of the left point.
    pub time: f64,
    pub dt: f64,
    pub before: StateView<'a>,
    pub after: StateView<'a>,
    /// Frame increment `dB_k = √dt·z_k`.
    pub db: &'a [f64],
    /// `true` when the right point lies outside `D`; the path stops there.
    pub exited: bool,
    /// `true` for the final visited step.
    pub last: bool,
}

/// Summary of a finished path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnd {
    /// State at `t ∧ τ`.
    pub state: FrameState,
    pub steps: usize,
    /// First grid time outside `D`, or `+∞`.
    pub exit_time: f64,
}

impl PathEnd {
    pub fn exited(&self) -> bool {
        self.exit_time.is_finite()
    }
}

/// A stored trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePath {
    pub dt: f64,
    pub horizon: f64,
    pub positions: Vec<Point>,
    pub frames: Vec<DMatrix<f64>>,
    /// `dB_k` for the step from `t_k` to `t_{k+1}`.
    pub increments: Vec<DVector<f64>>,
    pub q: Vec<DMatrix<f64>>,
    pub exit_time: f64,
    pub seed: u64,
    pub path_index: u64,
}

impl FramePath {
    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.positions.len()).map(|k| k as f64 * self.dt)
    }

    /// Writes one CSV row per stored time: `s, x_1..x_n, chart, exited, q_norm`
    /// where `exited` is 1 on the row at `τ` and `q_norm` is the spectral norm of `𝒬`.
    pub fn write_columns(&self, mut w: impl Write) -> std::io::Result<()> {
        let n = self.positions.first().map_or(0, |p| p.dim());
        let coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        writeln!(w, "s,{},chart,exited,q_norm", coords.join(","))?;
        let last = self.positions.len().saturating_sub(1);
        for (k, (p, q)) in self.positions.iter().zip(&self.q).enumerate() {
            let xs: Vec<String> = p.coords.iter().map(|c| format!("{c:.17e}")).collect();
            let chart = match p.chart {
                Chart::Primary => 0,
                Chart::Antipodal => 1,
            };
            let exited = u8::from(k == last && self.exit_time.is_finite());
            let qn = q.clone().svd(false, false).singular_values.max();
            writeln!(w, "{:.17e},{},{chart},{exited},{qn:.17e}", k as f64 * self.dt, xs.join(","))?;
        }
        Ok(())
    }
}

/// Simulates `L = ½Δ + Z` diffusions on a fixed time grid, optionally stopped
/// at the first grid time outside a domain.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    model: &'a ManifoldModel,
    drift: &'a DriftField,
    domain: Option<&'a DomainSpec>,
    exit: Option<DistanceFrom>,
    dt: f64,
    steps: usize,
    horizon: f64,
}

/// Number of grid steps covering `[0, t]` with step at most `dt`.
pub fn grid_steps(t: f64, dt: f64) -> usize {
    let r = t / dt;
    if (r - r.round()).abs() < 1e-9 * r.max(1.0) {
        r.round() as usize
    } else {
        r.ceil() as usize
    }
}

impl<'a> Simulator<'a> {
    /// `dt` is rounded down so that the grid ends exactly at `horizon`.
    pub fn new(
        model: &'a ManifoldModel,
        drift: &'a DriftField,
        domain: Option<&'a DomainSpec>,
        dt: f64,
        horizon: f64,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(param("dt", format!("must be positive, got {dt}")));
        }
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(param("horizon", format!("must be finite and non-negative, got {horizon}")));
        }
        if let Some(dom) = domain {
            let r0 = dom.r0();
            let limit = 1e-2 * r0.min(1.0).powi(2);
            if dt > limit * (1.0 + 1e-12) {
                return Err(param("dt", format!("must be at most 1e-2·min(1, r0²) = {limit:e}, got {dt}")));
            }
        }
        let steps = grid_steps(horizon, dt);
        let dt_eff = if steps == 0 { dt } else { horizon / steps as f64 };
        Ok(Simulator {
            model,
            drift,
            domain,
            exit: domain.map(|d| DistanceFrom::new(model, d.center())),
            dt: dt_eff,
            steps,
            horizon,
        })
    }

    pub fn model(&self) -> &ManifoldModel {
        self.model
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn initial(&self, x0: &Point) -> Result<FrameState> {
        let state = FrameState::initial(self.model, x0)?;
        if let Some(dom) = self.domain {
            if !dom.contains(self.model, x0) {
                return Err(Error::Domain("starting point must lie inside the domain".into()));
            }
        }
        Ok(state)
    }

    /// Runs one path, calling `visit` after every step.
    pub fn run_path(
        &self,
        x0: &Point,
        seed: u64,
        path_index: u64,
        mut visit: impl FnMut(&StepView),
    ) -> Result<PathEnd> {
        let n = self.model.dim();
        let mut cur = RawState::from_state(&self.initial(x0)?);
        let mut next = cur.clone();
        let mut stepper = Stepper::new(self.model, self.drift);
        let mut noise = NoiseStream::new(seed, path_index, n);
        let mut db = vec![0.0; n];
        let sqrt_dt = self.dt.sqrt();
        let radius = self.domain.map_or(f64::INFINITY, |d| d.outer_radius());
        let mut exit_time = f64::INFINITY;
        let mut taken = 0;
        for k in 0..self.steps {
            noise.fill(&mut db);
            for v in db.iter_mut() {
                *v *= sqrt_dt;
            }
            stepper.step(&cur, &mut next, self.dt, &db)?;
            let exited = match &self.exit {
                Some(d) => d.distance(&next.y, next.chart) >= radius,
                None => false,
            };
            taken = k + 1;
            let view = StepView {
                index: k,
                time: k as f64 * self.dt,
                dt: self.dt,
                before: StateView {
                    coords: &cur.y,
                    chart: cur.chart,
                    frame: &cur.u,
                    q: &cur.q,
                },
                after: StateView {
                    coords: &next.y,
                    chart: next.chart,
                    frame: &next.u,
                    q: &next.q,
                },
                db: &db,
                exited,
                last: exited || taken == self.steps,
            };
            visit(&view);
            std::mem::swap(&mut cur, &mut next);
            if exited {
                exit_time = taken as f64 * self.dt;
                break;
            }
        }
        Ok(PathEnd {
            state: cur.to_state(),
            steps: taken,
            exit_time,
        })
    }

    /// Runs one path and stores every step.
    pub fn simulate_path(&self, x0: &Point, seed: u64, path_index: u64) -> Result<FramePath> {
        let first = self.initial(x0)?;
        let n = self.model.dim();
        let mut positions = vec![first.point.clone()];
        let mut frames = vec![first.frame.clone()];
        let mut q = vec![first.q.clone()];
        let mut increments = Vec::with_capacity(self.steps);
        let end = self.run_path(x0, seed, path_index, |s| {
            positions.push(s.after.point());
            frames.push(DMatrix::from_column_slice(n, n, s.after.frame));
            q.push(DMatrix::from_column_slice(n, n, s.after.q));
            increments.push(DVector::from_column_slice(s.db));
        })?;
        Ok(FramePath {
            dt: self.dt,
            horizon: self.horizon,
            positions,
            frames,
            increments,
            q,
            exit_time: end.exit_time,
            seed,
            path_index,
        })
    }
}

/// Simulates one path; see [`Simulator`].
#[allow(clippy::too_many_arguments)]
pub fn simulate_path(
    model: &ManifoldModel,
    drift: &DriftField,
    x0: &Point,
    domain: Option<&DomainSpec>,
    dt: f64,
    horizon: f64,
    seed: u64,
    path_index: u64,
) -> Result<FramePath> {
    Simulator::new(model, drift, domain, dt, horizon)?.simulate_path(x0, seed, path_index)
}
