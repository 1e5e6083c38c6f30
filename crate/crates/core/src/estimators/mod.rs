//! Monte Carlo estimators for the stopped semigroups and their derivatives.

mod bismut;
mod report;
mod semigroup;
mod stats;

pub use bismut::{bismut_gradient, bismut_gradients, eigen_gradient, h_energy, BismutReports, Semigroup};
pub use report::EstimateReport;
pub use semigroup::{estimate_p1, estimate_p2, expected_exit_time, reconstruct_identity};
pub use stats::{run_paths, McParams, Moments, CHUNK};
