//! Configuration, experiment orchestration and file output.

pub mod check;
pub mod config;
pub mod experiment;
pub mod snapshot;

pub use config::{parse_config, ExperimentConfig, ExperimentKind, Mode};
pub use experiment::{
    generate_initial, run_experiment, run_limit_experiment, run_sweep, simulate_limit, simulate_sweep, LimitRun,
    Outcome, RunReport, SweepResult,
};
pub use snapshot::{read_snapshot, write_snapshot, Snapshot};
