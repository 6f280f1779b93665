//! Experiment runner for the fixed-point toolkit: declarative configs in,
//! reports and tables out.

pub mod config;
pub mod error;
pub mod report;
pub mod reproduce;
pub mod runner;
pub mod table;

pub use config::{load_config, parse_config, Encoding, ExperimentConfig, ExperimentKind};
pub use error::{CliError, Result};
pub use report::{RunOutput, RunReport, TaskStatus};
pub use runner::run;
pub use table::{emit_convergence_table, TableFormat};
