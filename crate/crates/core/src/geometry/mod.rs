//! Manifold models, geodesic-ball domains and curvature bounds.

mod curvature;
mod domain;
mod grid;
mod model;
mod oracle;

pub use curvature::{domain_bounds, domain_bounds_with, CurvatureBounds, DEFAULT_RESOLUTION, MIN_SAMPLES};
pub use domain::{DomainEcho, DomainSpec};
pub use grid::BallGrid;
pub use oracle::{
    fd_christoffel, fd_riemann, geometry_self_check, GeometryCheck, CONNECTION_STEP, METRIC_STEP, ORACLE_TOLERANCE,
};
pub use model::{Chart, Christoffel, ManifoldModel, ModelKind, Point, Riemann};
pub(crate) use model::DistanceFrom;
