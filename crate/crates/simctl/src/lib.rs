//! File formats, configuration loading, the worker pool and the command
//! line for the `dasim-core` simulator.

pub mod checkpoint;
pub mod config;
pub mod output;
pub mod report;
pub mod runner;

pub use config::{config_hash, load_scenario, parse_scenario, ConfigError};
pub use output::{Summary, TraceLevel};
pub use runner::{parse_schemes, parse_seeds, run_schemes, worker_pool, RunOptions, SchemeResult};
