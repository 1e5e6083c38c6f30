//! Assembles geometry, fields, estimators and bounds into pass/fail checks.

mod artifacts;
mod checks;
mod quadrature;
mod report;
mod suite;
mod sweep;

pub use artifacts::{
    csv_matrix, json_records, markdown_summary, timing_json, write_artifacts, ArtifactPaths, CHECKS_FILE, CSV_HEADER,
    MATRIX_FILE, SCHEMA_VERSION, SUMMARY_FILE, TIMING_FILE,
};
pub use checks::{
    check_eigen_global, check_eigen_local, check_forms_theorem, check_energy_bound, check_lp_theorem, check_main_theorem,
    check_prelim, check_taylor_baseline, model_label, scan_function, FormsVariant, FunctionScan, MIN_POINTS_ACROSS,
};
pub use quadrature::{lp_norms, LpNorms};
pub use report::{CheckReport, LhsMethod};
pub use suite::{
    forms_checks, energy_checks, prelim_checks, prelim_configs, quadrature_checks, run_suite, Suite, MC_HORIZON,
    QUADRATURE_DELTAS, QUADRATURE_POINTS,
};
pub use sweep::{run_sweep, SweepCase, SweepSpec, SWEEP_DELTAS, SWEEP_INNER_RADIUS, SWEEP_R0S};
