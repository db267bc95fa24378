//! Configuration, orchestration and reporting around `tcm-core`.

pub mod checks;
pub mod config;
pub mod runner;

pub use config::{load_config, parse_config, ConfigError, Regime, RunConfig};
pub use runner::{exit, resume, run_single, run_sweep, RunReport, SweepReport};
