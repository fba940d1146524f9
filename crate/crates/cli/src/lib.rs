//! Config-driven experiment harness on top of `maxreg_core`.

pub mod config;
pub mod experiments;
pub mod record;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::{run_experiment, run_experiment_with_threads};
pub use record::{write_results, ResultRecord, Status};
