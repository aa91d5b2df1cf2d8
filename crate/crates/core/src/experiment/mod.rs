//! Config-driven experiments producing CSV tables and a JSON summary.

pub mod config;
pub mod output;
pub mod run;

pub use config::{config_hash, load_config, parse_config, Caps, EventConfig, EventKind, ExperimentConfig, ExperimentKind, ModelConfig, ValidationReport};
pub use run::{run_experiment, RunOptions, RunOutcome};
