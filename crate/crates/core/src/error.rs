use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the simulation, estimation and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("outside the analytic domain: {0}")]
    Domain(String),

    #[error("Laplace exponent has no positive root below {searched}")]
    NoPositiveRoot { searched: f64 },

    #[error("Laplace exponent slope at 0+ is {slope}, no stationary heavy-tailed solution")]
    NotStationaryHeavyTail { slope: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("truncation audit failed for {label}: shift {shift} exceeds one standard error {se}")]
    TruncationWarning { label: String, shift: f64, se: f64 },

    #[error("tail estimate unstable: {0}")]
    EstimationUnstable(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-positive data: {0}")]
    NonPositiveData(String),

    #[error("too few exceedances: {found} (need {needed})")]
    TooFewExceedances { found: usize, needed: usize },

    #[error("no exceedances above threshold {threshold}")]
    NoExceedances { threshold: f64 },

    #[error("alpha = {alpha} lies in the excluded neighbourhood of a boundary case")]
    BoundaryAlpha { alpha: f64 },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("config validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("task `{task}` failed: {source}")]
    Task {
        task: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("plot rendering failed: {0}")]
    Plot(String),
}

pub type Result<T> = std::result::Result<T, Error>;
