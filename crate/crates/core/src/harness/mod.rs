//! Configuration, initial data, run orchestration, sweeps and file formats.

pub mod config;
pub mod init;
pub mod io;
pub mod report;
pub mod run;
pub mod sweep;
pub mod validate;

pub use config::RunConfig;
pub use report::{RunReport, Termination};
pub use run::{report_from_dir, run, RunOutcome};
pub use sweep::{sweep, SweepRow, SweepSpec};
pub use validate::{validate_series, Validation};
