//! Monte Carlo checks of the limit laws of partial maxima and of the
//! integrated process.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::rng::{derive_seed, par_map, stream_rng};
use crate::sim::{self, SimOptions, SupMode};
use crate::stats::summary::{excess_kurtosis, iqr, ks_one_sample, mean, ols, skewness, variance};
use crate::stats::tail::{default_k_order, hill_estimator};
use crate::theory::normalizer_a_n;

/// `exp(-kappa x^{-alpha})` for `x > 0`, else 0.
pub fn frechet_limit_cdf(x: f64, kappa: f64, alpha: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-kappa * x.powf(-alpha)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartialMaximaSettings {
    pub n_list: Vec<usize>,
    pub n_reps: usize,
    pub seed: u64,
    pub sim: SimOptions,
}

impl Default for PartialMaximaSettings {
    fn default() -> Self {
        PartialMaximaSettings {
            n_list: vec![10, 100, 1000, 10000],
            n_reps: 2000,
            seed: 0,
            sim: SimOptions {
                subgrid: 32,
                sup_mode: SupMode::Bridge,
                ..SimOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialMaximaPoint {
    pub n: usize,
    pub a_n: f64,
    pub ks: f64,
    /// Normalized maxima `M(n) / a_n`, in replication order.
    pub sample: Vec<f64>,
}

/// Replicate `M(n) / a_n` with `M(n) = sup_{0<=t<=n} V_t` for every `n` and
/// measure the Kolmogorov distance to `exp(-kappa x^{-alpha})`.
pub fn partial_maxima_check(
    model: &LevyModel,
    alpha: f64,
    c: f64,
    kappa: f64,
    settings: &PartialMaximaSettings,
) -> Result<Vec<PartialMaximaPoint>> {
    model.validate()?;
    if settings.n_list.is_empty() || settings.n_list.contains(&0) {
        return Err(Error::InvalidConfig(
            "n_list must hold positive sizes".into(),
        ));
    }
    if settings.n_reps < 2 {
        return Err(Error::InvalidConfig("n_reps must be >= 2".into()));
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "kappa must be > 0, got {kappa}"
        )));
    }
    settings
        .n_list
        .iter()
        .map(|&n| {
            let a_n = normalizer_a_n(c, alpha, n as f64)?;
            let maxima = par_map(settings.n_reps, |rep| -> Result<f64> {
                let seed = derive_seed(settings.seed, &[n as u64, rep as u64]);
                let mut rng = stream_rng(seed, 0);
                let (v0, _) = sim::stationary_init(model, 1.0, &settings.sim, &mut rng)?;
                let (_, sup, _) =
                    sim::simulate_blocks(model, v0, 1.0, n, &settings.sim, false, &mut rng);
                Ok(sup.iter().copied().fold(v0, f64::max) / a_n)
            });
            let sample: Vec<f64> = maxima.into_iter().collect::<Result<_>>()?;
            let ks = ks_one_sample(&sample, |x| frechet_limit_cdf(x, kappa, alpha));
            Ok(PartialMaximaPoint { n, a_n, ks, sample })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratedRegime {
    /// `alpha > 1`: normal limit under `sqrt(t)` scaling.
    Gaussian,
    /// `alpha < 1/2`: `2 alpha`-stable limit under `t^{1/(2 alpha)}` scaling.
    Stable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratedLimitSettings {
    pub t_list: Vec<f64>,
    pub n_reps: usize,
    pub seed: u64,
    pub sim: SimOptions,
    pub max_abs_skew: f64,
    pub max_abs_excess_kurtosis: f64,
    pub max_ks: f64,
    /// Relative tolerance of the Hill index against `2 alpha`.
    pub hill_rel_tol: f64,
    /// Absolute tolerance of the log-IQR slope against `1/(2 alpha)`.
    pub slope_tol: f64,
}

impl Default for IntegratedLimitSettings {
    fn default() -> Self {
        IntegratedLimitSettings {
            t_list: vec![32.0, 64.0, 128.0, 256.0, 512.0],
            n_reps: 2000,
            seed: 0,
            sim: SimOptions {
                subgrid: 16,
                ..SimOptions::default()
            },
            max_abs_skew: 0.2,
            max_abs_excess_kurtosis: 0.5,
            max_ks: 0.05,
            hill_rel_tol: 0.2,
            slope_tol: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratedLimitReport {
    pub alpha: f64,
    pub regime: IntegratedRegime,
    /// Symmetric driving noise (the centred limit then holds without drift).
    pub symmetric_driver: bool,
    pub t_max: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub ks_normal: Option<f64>,
    pub hill_index: Option<f64>,
    pub slope: Option<f64>,
    pub expected_slope: Option<f64>,
    /// Normality gates (Gaussian regime) or Hill gate (stable regime).
    pub shape_pass: bool,
    /// Scaling-slope gate; always true in the Gaussian regime.
    pub slope_pass: bool,
    pub pass: bool,
    /// `I*_t` replicates at the largest `t`.
    pub sample: Vec<f64>,
}

pub const BOUNDARY_HALF_WIDTH: f64 = 0.05;

pub fn integrated_regime(alpha: f64) -> Result<IntegratedRegime> {
    if (alpha - 0.5).abs() <= BOUNDARY_HALF_WIDTH || (alpha - 1.0).abs() <= BOUNDARY_HALF_WIDTH {
        return Err(Error::BoundaryAlpha { alpha });
    }
    if alpha > 1.0 {
        Ok(IntegratedRegime::Gaussian)
    } else if alpha > 0.0 && alpha < 0.5 {
        Ok(IntegratedRegime::Stable)
    } else {
        Err(Error::PreconditionViolated(format!(
            "alpha = {alpha} lies outside (0, 0.5) and (1, inf)"
        )))
    }
}

/// Replicates of `I*_t` on `t_list`, one row per replication.
pub fn replicate_integrated(
    model: &LevyModel,
    settings: &IntegratedLimitSettings,
) -> Result<Vec<Vec<f64>>> {
    par_map(settings.n_reps, |rep| {
        let mut rng = stream_rng(derive_seed(settings.seed, &[rep as u64]), 0);
        sim::simulate_integrated_with(model, &settings.t_list, &settings.sim, &mut rng)
    })
    .into_iter()
    .collect()
}

pub fn integrated_limit_check(
    model: &LevyModel,
    alpha: f64,
    settings: &IntegratedLimitSettings,
) -> Result<IntegratedLimitReport> {
    model.validate()?;
    let regime = integrated_regime(alpha)?;
    if settings.n_reps < 20 {
        return Err(Error::InvalidConfig("n_reps must be >= 20".into()));
    }
    if settings.t_list.is_empty() {
        return Err(Error::InvalidConfig("t_list must not be empty".into()));
    }
    let rows = replicate_integrated(model, settings)?;
    let last = settings.t_list.len() - 1;
    let t_max = settings.t_list[last];
    let sample: Vec<f64> = rows.iter().map(|r| r[last]).collect();
    let mut report = IntegratedLimitReport {
        alpha,
        regime,
        symmetric_driver: model.driver_symmetric(),
        t_max,
        skewness: None,
        excess_kurtosis: None,
        ks_normal: None,
        hill_index: None,
        slope: None,
        expected_slope: None,
        shape_pass: false,
        slope_pass: true,
        pass: false,
        sample,
    };
    match regime {
        IntegratedRegime::Gaussian => {
            let x: Vec<f64> = report.sample.iter().map(|v| v / t_max.sqrt()).collect();
            let (m, sd) = (mean(&x), variance(&x).sqrt());
            let normal = Normal::new(m, sd)
                .map_err(|e| Error::EstimationUnstable(format!("normal fit failed: {e}")))?;
            let skew = skewness(&x);
            let kurt = excess_kurtosis(&x);
            let ks = ks_one_sample(&x, |v| normal.cdf(v));
            report.shape_pass = skew.abs() <= settings.max_abs_skew
                && kurt.abs() <= settings.max_abs_excess_kurtosis
                && ks <= settings.max_ks;
            report.skewness = Some(skew);
            report.excess_kurtosis = Some(kurt);
            report.ks_normal = Some(ks);
        }
        IntegratedRegime::Stable => {
            let target = 2.0 * alpha;
            let abs: Vec<f64> = report.sample.iter().map(|v| v.abs()).collect();
            let hill = hill_estimator(&abs, default_k_order(abs.len()))?.alpha_hat;
            report.hill_index = Some(hill);
            report.shape_pass = (hill / target - 1.0).abs() <= settings.hill_rel_tol;
            if settings.t_list.len() >= 3 {
                let x: Vec<f64> = settings.t_list.iter().map(|t| t.ln()).collect();
                let y: Vec<f64> = (0..settings.t_list.len())
                    .map(|j| iqr(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()).ln())
                    .collect();
                let slope = ols(&x, &y)?.slope;
                let expected = 1.0 / target;
                report.slope = Some(slope);
                report.expected_slope = Some(expected);
                report.slope_pass = (slope - expected).abs() <= settings.slope_tol;
            } else {
                report.slope_pass = false;
            }
        }
    }
    report.pass = report.shape_pass && report.slope_pass;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frechet_cdf_values() {
        assert!((frechet_limit_cdf(1.0, 1.0, 1.0) - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(frechet_limit_cdf(0.0, 1.0, 2.0), 0.0);
        assert_eq!(frechet_limit_cdf(-3.0, 1.0, 2.0), 0.0);
    }

    #[test]
    fn regimes_and_boundaries() {
        assert_eq!(integrated_regime(2.0).unwrap(), IntegratedRegime::Gaussian);
        assert_eq!(integrated_regime(0.4).unwrap(), IntegratedRegime::Stable);
        for a in [0.47, 0.5, 0.53, 0.96, 1.0, 1.04] {
            assert!(matches!(
                integrated_regime(a),
                Err(Error::BoundaryAlpha { .. })
            ));
        }
        assert!(matches!(
            integrated_regime(0.75),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn nelson_driver_is_flagged_symmetric() {
        let m = LevyModel::nelson(1.0, 1.0, 2f64.sqrt());
        let s = IntegratedLimitSettings {
            t_list: vec![4.0, 8.0],
            n_reps: 50,
            ..IntegratedLimitSettings::default()
        };
        let r = integrated_limit_check(&m, 2.0, &s).unwrap();
        assert!(r.symmetric_driver);
        assert_eq!(r.sample.len(), 50);
    }
}
