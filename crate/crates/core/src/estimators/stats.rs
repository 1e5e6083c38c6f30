//! Streaming moments and the deterministic parallel path loop.

use rayon::prelude::*;

use crate::error::{param, Result};

/// Paths per chunk. Chunks are reduced in index order, so the result does not
/// depend on how chunks are scheduled.
pub const CHUNK: usize = 256;

/// Welford accumulator for a fixed number of components.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Moments {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    /// Chan's pairwise update.
    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Sample variance with the `N − 1` denominator.
    pub fn variance(&self) -> Vec<f64> {
        let d = (self.count.max(2) - 1) as f64;
        self.m2.iter().map(|s| (s / d).max(0.0)).collect()
    }

    /// `sd / √N`.
    pub fn std_error(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.variance().iter().map(|v| (v / n).sqrt()).collect()
    }
}

/// Monte Carlo controls shared by every estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McParams {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// Worker threads; `0` uses the rayon default.
    pub workers: usize,
}

impl McParams {
    pub fn new(paths: usize, dt: f64, seed: u64) -> Self {
        McParams {
            paths,
            dt,
            seed,
            workers: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths < 2 {
            return Err(param("paths", format!("need at least 2 paths, got {}", self.paths)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(param("dt", format!("must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Calls `per_path(i, out)` for `i in 0..paths` and accumulates the
/// `dim`-component records in fixed chunk order.
pub fn run_paths<F>(params: &McParams, dim: usize, per_path: F) -> Result<Moments>
where
    F: Fn(u64, &mut [f64]) -> Result<()> + Sync,
{
    let chunks = params.paths.div_ceil(CHUNK);
    let work = || -> Result<Vec<Moments>> {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = Moments::new(dim);
                let mut rec = vec![0.0; dim];
                for i in c * CHUNK..((c + 1) * CHUNK).min(params.paths) {
                    rec.fill(0.0);
                    per_path(i as u64, &mut rec)?;
                    acc.push(&rec);
                }
                Ok(acc)
            })
            .collect()
    };
    let parts = if params.workers == 0 {
        work()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(params.workers)
            .build()
            .map_err(|e| param("workers", e.to_string()))?;
        pool.install(work)?
    };
    let mut total = Moments::new(dim);
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}
