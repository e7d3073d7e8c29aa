//! Command implementations behind the `ghz-transfer` binary.

pub mod budget;
pub mod config;
pub mod parse;
pub mod run;
pub mod sweep;
pub mod verify;

pub use budget::{budget_table, BudgetTable};
pub use config::{load_params, Emit, RunConfig, Thresholds};
pub use run::{execute, RunReport, RunResult};
pub use sweep::{run_sweep, SweepAxis, SweepRow};
pub use verify::{run_verify, VerifyCheck};
