//! Configuration-driven experiment runner for `udep-core`.
//!
//! A run reads a flat `key = value` config, executes one experiment and
//! writes `trajectories.csv`, `summary.csv` and `manifest.txt` into the
//! output directory. Floats are written in shortest round-trip form, so
//! identical configs give byte-identical CSVs for any worker count.

pub mod config;
pub mod run;

pub use config::{parse_config, Experiment, ExperimentConfig, RawConfig};
pub use run::{compute, run_experiment, RunOutput};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}
