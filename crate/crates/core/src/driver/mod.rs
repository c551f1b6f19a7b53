//! Case registry, configuration, time loop, diagnostics and output.

pub mod config;
pub mod convergence;
pub mod io;
pub mod run;
pub mod solver;

pub use config::{CaseConfig, CaseKind, VtkFormat};
pub use convergence::{convergence_study, rain_fallout_increment, space_time_l2_error, ConvergenceRow};
pub use io::{read_restart, read_vtk, sample_snapshot, write_restart, write_vtk, Snapshot, SNAPSHOT_FIELDS};
pub use run::{run_case, run_with, DiagnosticsRecord, RunOutcome, RunSummary, Simulation, DIAGNOSTICS_COLUMNS};
pub use solver::{MoistSolver, PointExtrema};
