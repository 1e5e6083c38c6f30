use serde::{Deserialize, Serialize};

use super::model::{ManifoldModel, Point};
use crate::error::{param, Error, Result};

/// Concentric geodesic balls `D₀ = B(x₀, R₀) ⊂ D = B(x₀, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    center: Point,
    outer_radius: f64,
    inner_radius: f64,
}

/// Serializable description of a domain, echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainEcho {
    pub center: Vec<f64>,
    pub outer_radius: f64,
    pub inner_radius: f64,
}

impl DomainSpec {
    pub fn new(model: &ManifoldModel, center: Point, outer_radius: f64, inner_radius: f64) -> Result<Self> {
        model.check_point(&center)?;
        if !(outer_radius.is_finite() && outer_radius > 0.0) {
            return Err(param("outer_radius", format!("must be positive, got {outer_radius}")));
        }
        if !(inner_radius >= 0.0 && inner_radius < outer_radius) {
            return Err(param(
                "inner_radius",
                format!("need 0 <= R0 < R, got R0 = {inner_radius}, R = {outer_radius}"),
            ));
        }
        let limit = model.validity_radius();
        if outer_radius >= limit {
            return Err(Error::Domain(format!(
                "outer radius {outer_radius} reaches the validity radius {limit} of {}",
                model.name()
            )));
        }
        Ok(DomainSpec {
            center,
            outer_radius,
            inner_radius,
        })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    /// Separation `r₀ = R − R₀` between `D₀` and `∂D`.
    pub fn r0(&self) -> f64 {
        self.outer_radius - self.inner_radius
    }

    pub fn contains(&self, model: &ManifoldModel, p: &Point) -> bool {
        model.distance_unchecked(&self.center, p) < self.outer_radius
    }

    pub fn contains_inner(&self, model: &ManifoldModel, p: &Point) -> bool {
        model.distance_unchecked(&self.center, p) <= self.inner_radius
    }

    pub fn echo(&self) -> DomainEcho {
        DomainEcho {
            center: self.center.coords.iter().copied().collect(),
            outer_radius: self.outer_radius,
            inner_radius: self.inner_radius,
        }
    }
}
