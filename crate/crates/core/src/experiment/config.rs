//! TOML experiment configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::sim::{SimOptions, SupMode};
use crate::theory::{McSettings, SupMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Simulate,
    Constants,
    VerifyIdentities,
    Tails,
    Extremes,
    AcfRates,
    IntegratedLimit,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Simulate => "simulate",
            Task::Constants => "constants",
            Task::VerifyIdentities => "verify_identities",
            Task::Tails => "tails",
            Task::Extremes => "extremes",
            Task::AcfRates => "acf_rates",
            Task::IntegratedLimit => "integrated_limit",
        }
    }

    /// Seed coordinate, independent of the position in the task list.
    pub(crate) fn code(self) -> u64 {
        match self {
            Task::Simulate => 1,
            Task::Constants => 2,
            Task::VerifyIdentities => 3,
            Task::Tails => 4,
            Task::Extremes => 5,
            Task::AcfRates => 6,
            Task::IntegratedLimit => 7,
        }
    }
}

/// Pass/fail tolerances of the report rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Identity checks and cross-checks: `|z| <=` this.
    pub z_max: f64,
    /// Relative error of tail ratios against their constants.
    pub tail_ratio_rel: f64,
    /// Relative error of the Hill index against `alpha`.
    pub hill_rel: f64,
    /// Kolmogorov distance of normalized maxima to the Frechet limit.
    pub ks_max: f64,
    /// Absolute error of rate-regression slopes.
    pub rate_slope: f64,
    pub skew_max: f64,
    pub excess_kurtosis_max: f64,
    pub normal_ks_max: f64,
    /// Absolute error of the stable scaling slope `1/(2 alpha)`.
    pub integrated_slope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            z_max: 3.0,
            tail_ratio_rel: 0.25,
            hill_rel: 0.2,
            ks_max: 0.05,
            rate_slope: 0.12,
            skew_max: 0.2,
            excess_kurtosis_max: 0.5,
            normal_ks_max: 0.05,
            integrated_slope: 0.1,
        }
    }
}

/// Monte Carlo settings of the theory constants (the seed comes from the
/// experiment seed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub horizon: Option<f64>,
    pub integral_steps: usize,
    pub sup_method: SupMethod,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        let d = McSettings::default();
        MonteCarloConfig {
            n_paths: 20_000,
            dt: d.dt,
            horizon: d.horizon,
            integral_steps: d.integral_steps,
            sup_method: d.sup_method,
        }
    }
}

impl MonteCarloConfig {
    pub fn settings(&self, seed: u64) -> McSettings {
        McSettings {
            n_paths: self.n_paths,
            seed,
            horizon: self.horizon,
            dt: self.dt,
            integral_steps: self.integral_steps,
            sup_method: self.sup_method,
        }
    }
}

/// Estimator settings shared by the tail, extremes, rates and integrated tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationConfig {
    /// Quantile level of the tail-ratio comparisons.
    pub tail_quantile: f64,
    /// Quantile of the block suprema used as extremal-index threshold.
    pub threshold_quantile: f64,
    pub block_len: usize,
    pub run_gap: usize,
    /// Hill `k`; default `n^0.6`.
    pub hill_k: Option<usize>,
    pub rate_lag: usize,
    pub t_list: Vec<f64>,
    /// Series length of the tails and extremes tasks; default the largest size.
    pub series_len: Option<usize>,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        EstimationConfig {
            tail_quantile: 0.995,
            threshold_quantile: 0.998,
            block_len: 20,
            run_gap: 10,
            hill_k: None,
            rate_lag: 1,
            t_list: vec![32.0, 64.0, 128.0, 256.0, 512.0],
            series_len: None,
        }
    }
}

fn default_h() -> f64 {
    1.0
}

fn default_sizes() -> Vec<usize> {
    vec![250, 1000, 4000, 16000, 64000]
}

fn default_reps() -> usize {
    400
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("genou-out")
}

fn default_simulation() -> SimOptions {
    SimOptions {
        subgrid: 16,
        sup_mode: SupMode::Bridge,
        ..SimOptions::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub plots: bool,
    pub model: LevyModel,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_simulation")]
    pub simulation: SimOptions,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub estimation: EstimationConfig,
}

impl ExperimentConfig {
    /// Every violated constraint, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.tasks.is_empty() {
            v.push("tasks: must name at least one task".into());
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if self.tasks[..i].contains(t) {
                v.push(format!("tasks: `{}` is listed twice", t.name()));
            }
        }
        if self.seed > i64::MAX as u64 {
            // TOML integers are signed; larger seeds could not be echoed.
            v.push(format!("seed: must be <= {}, got {}", i64::MAX, self.seed));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            v.push(format!("h: must be finite and > 0, got {}", self.h));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            v.push("sizes: must be non-empty with every size >= 1".into());
        }
        if self.sizes.windows(2).any(|w| w[1] <= w[0]) {
            v.push("sizes: must be strictly increasing".into());
        }
        if self.reps == 0 {
            v.push("reps: must be >= 1".into());
        }
        if let Err(e) = self.model.validate() {
            v.push(format!("model: {e}"));
        }
        let tol = &self.tolerances;
        for (name, value) in [
            ("z_max", tol.z_max),
            ("tail_ratio_rel", tol.tail_ratio_rel),
            ("hill_rel", tol.hill_rel),
            ("ks_max", tol.ks_max),
            ("rate_slope", tol.rate_slope),
            ("skew_max", tol.skew_max),
            ("excess_kurtosis_max", tol.excess_kurtosis_max),
            ("normal_ks_max", tol.normal_ks_max),
            ("integrated_slope", tol.integrated_slope),
        ] {
            if !(value.is_finite() && value > 0.0) {
                v.push(format!(
                    "tolerances.{name}: must be finite and > 0, got {value}"
                ));
            }
        }
        if self.simulation.subgrid == 0 {
            v.push("simulation.subgrid: must be >= 1".into());
        }
        let mc = &self.monte_carlo;
        if mc.n_paths < 2 {
            v.push(format!(
                "monte_carlo.n_paths: must be >= 2, got {}",
                mc.n_paths
            ));
        }
        if !(mc.dt > 0.0 && mc.dt <= self.h) {
            v.push(format!("monte_carlo.dt: must lie in (0, h], got {}", mc.dt));
        } else if ((self.h / mc.dt).round() * mc.dt - self.h).abs() > 1e-9 * self.h {
            v.push(format!(
                "monte_carlo.dt: h = {} is not a multiple of {}",
                self.h, mc.dt
            ));
        }
        if mc.horizon.is_some_and(|t| !(t > 0.0)) {
            v.push("monte_carlo.horizon: must be > 0".into());
        }
        if mc.integral_steps == 0 {
            v.push("monte_carlo.integral_steps: must be >= 1".into());
        }
        let est = &self.estimation;
        for (name, q) in [
            ("tail_quantile", est.tail_quantile),
            ("threshold_quantile", est.threshold_quantile),
        ] {
            if !(q > 0.0 && q < 1.0) {
                v.push(format!("estimation.{name}: must lie in (0,1), got {q}"));
            }
        }
        if est.block_len == 0 {
            v.push("estimation.block_len: must be >= 1".into());
        }
        if est.run_gap == 0 {
            v.push("estimation.run_gap: must be >= 1".into());
        }
        if est.hill_k.is_some_and(|k| k < 2) {
            v.push("estimation.hill_k: must be >= 2".into());
        }
        if est.t_list.is_empty()
            || !(est.t_list[0] > 0.0)
            || est.t_list.windows(2).any(|w| !(w[1] > w[0]))
        {
            v.push("estimation.t_list: must be non-empty, positive and increasing".into());
        }
        if est.series_len == Some(0) {
            v.push("estimation.series_len: must be >= 1".into());
        }
        if self.tasks.contains(&Task::AcfRates) {
            if self.sizes.len() < 4 {
                v.push("sizes: acf_rates needs >= 4 sizes".into());
            }
            if let (Some(&lo), Some(&hi)) = (self.sizes.first(), self.sizes.last()) {
                if (hi as f64) < 100.0 * lo as f64 {
                    v.push("sizes: acf_rates needs sizes spanning >= 2 decades".into());
                }
                if 2 * est.rate_lag >= lo {
                    v.push("estimation.rate_lag: must be below half the smallest size".into());
                }
            }
            if self.reps < 200 {
                v.push(format!("reps: acf_rates needs >= 200, got {}", self.reps));
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Series length of the single-series tasks.
    pub fn series_len(&self) -> usize {
        self.estimation
            .series_len
            .unwrap_or_else(|| self.sizes.last().copied().unwrap_or(1))
    }

    /// The config with every default filled in, as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }
}

/// Parse and validate a TOML experiment document.
pub fn parse_config(document: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig =
        toml::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Parse and validate a bare model table (`family = ...` plus parameters).
pub fn parse_model_toml(document: &str) -> Result<LevyModel> {
    let model: LevyModel = toml::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
tasks = ["constants"]

[model]
family = "nelson"
lambda = 1.0
a = 1.0
sigma = 1.4142135623730951
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.tasks, vec![Task::Constants]);
        assert_eq!(c.h, 1.0);
        assert_eq!(c.seed, 0);
        assert_eq!(c.tolerances, Tolerances::default());
        let echoed = c.to_toml();
        assert!(echoed.contains("reps = 400"), "{echoed}");
        assert!(echoed.contains("[tolerances]"));
    }

    #[test]
    fn round_trip() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
        let cogarch = r#"
tasks = ["verify_identities", "tails"]
seed = 7
[model]
family = "cogarch_cpp"
beta = 1.0
c = 1.0
lambda_g = 0.5
mu = 2.0
jump_law = { law = "gaussian", sd = 1.0 }
[monte_carlo]
horizon = 40.0
"#;
        let c = parse_config(cogarch).unwrap();
        assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let doc = format!("{MINIMAL}\nextra = 1\n");
        assert!(matches!(parse_config(&doc), Err(Error::Parse(_))));
        let doc = MINIMAL.replace("a = 1.0", "a = 1.0\nrho = 2.0");
        let err = parse_config(&doc).unwrap_err().to_string();
        assert!(err.contains("rho"), "{err}");
    }

    #[test]
    fn all_violations_are_listed() {
        let doc = MINIMAL.replace(
            "tasks = [\"constants\"]",
            "tasks = [\"constants\"]\nh = -1.0\nreps = 0",
        );
        match parse_config(&doc) {
            Err(Error::Validation(v)) => {
                assert!(v.iter().any(|m| m.starts_with("h:")), "{v:?}");
                assert!(v.iter().any(|m| m.starts_with("reps:")), "{v:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_task_list_is_invalid() {
        let doc = MINIMAL.replace("[\"constants\"]", "[]");
        assert!(matches!(parse_config(&doc), Err(Error::Validation(_))));
    }
}
