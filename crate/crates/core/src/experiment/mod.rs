//! Configuration-driven experiments: tasks, CSV reports and SVG plots.

pub mod config;
pub mod plots;
pub mod report;
pub mod tasks;

pub use config::{
    parse_config, EstimationConfig, ExperimentConfig, MonteCarloConfig, Task, Tolerances,
};
pub use plots::emit_plots;
pub use report::{Artifact, ExperimentReport, ReportRow};
pub use tasks::{run_experiment, run_experiment_in, REPORT_FILE};
