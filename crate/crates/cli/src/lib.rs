//! Scenario runner for `thinspec`: JSON configuration, CSV/JSON output,
//! figure datasets, oracle cross-checks and parallel sweeps.

pub mod check;
pub mod config;
pub mod error;
pub mod figures;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{parse_axis, parse_scenario, parse_sweep, CheckName, RunKind, Scenario, SweepSpec, Tolerances};
pub use error::{CliError, CliResult};
pub use run::{compute, run_scenario, RunOutput};
pub use sweep::{compute_sweep, run_sweep};
