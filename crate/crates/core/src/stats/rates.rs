//! Replication harness for the convergence rates of sample autocovariances
//! and autocorrelations.
//!
//! For each series length `n` the statistic is replicated `n_reps` times and
//! its interquartile range regressed on `n` in log-log scale. The IQR is used
//! because the limits in the heavy-tailed regimes have no variance.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::rng::{derive_seed, par_map, stream_rng};
use crate::sim::{self, SimOptions};
use crate::stats::acf::acv_at;
use crate::stats::summary::{iqr, mean, ols, quantile, LinearFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateStatistic {
    AcvV,
    AcvI,
    AcfV,
    AcfI,
}

impl RateStatistic {
    pub fn name(self) -> &'static str {
        match self {
            RateStatistic::AcvV => "acv_V",
            RateStatistic::AcvI => "acv_I",
            RateStatistic::AcfV => "acf_V",
            RateStatistic::AcfI => "acf_I",
        }
    }

    fn uses_increments(self) -> bool {
        matches!(self, RateStatistic::AcvI | RateStatistic::AcfI)
    }

    fn normalized(self) -> bool {
        matches!(self, RateStatistic::AcfV | RateStatistic::AcfI)
    }
}

/// Where the replicated series come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesSource<'a> {
    Model(&'a LevyModel),
    /// i.i.d. standard normal series, used to calibrate the harness.
    IidGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateSettings {
    pub statistic: RateStatistic,
    pub lag: usize,
    pub n_list: Vec<usize>,
    pub n_reps: usize,
    pub seed: u64,
    pub h: f64,
    pub centered: bool,
    pub sim: SimOptions,
}

impl Default for RateSettings {
    fn default() -> Self {
        RateSettings {
            statistic: RateStatistic::AcvV,
            lag: 1,
            n_list: vec![250, 1000, 4000, 16000, 64000],
            n_reps: 400,
            seed: 0,
            h: 1.0,
            centered: false,
            sim: SimOptions {
                subgrid: 16,
                ..SimOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub iqr: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateDiagnostic {
    pub statistic: RateStatistic,
    pub lag: usize,
    pub points: Vec<RatePoint>,
    /// Mean of the statistic over the largest-`n` batch.
    pub gamma_ref: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub ci: (f64, f64),
    pub intercept: f64,
}

/// Limit-theory slope of `log IQR` against `log n` for a given tail index:
/// `2/alpha - 1` (V) and `1/alpha - 1` (I) in the stable regimes, `-1/2` in
/// the Gaussian regimes and `0` where the estimator is inconsistent.
/// `None` on the regime boundaries.
pub fn expected_rate_slope(statistic: RateStatistic, alpha: f64) -> Option<f64> {
    // Regimes are stated for the tail index `kappa` of the observed series.
    let kappa = if statistic.uses_increments() {
        2.0 * alpha
    } else {
        alpha
    };
    if kappa > 4.0 {
        Some(-0.5)
    } else if kappa > 2.0 && kappa < 4.0 {
        Some(2.0 / kappa - 1.0)
    } else if kappa < 2.0 {
        Some(0.0)
    } else {
        None
    }
}

fn validate(settings: &RateSettings) -> Result<()> {
    let mut problems = Vec::new();
    let sizes = &settings.n_list;
    if sizes.len() < 4 {
        problems.push(format!("n_list needs >= 4 sizes, got {}", sizes.len()));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        problems.push("n_list must be strictly increasing".into());
    }
    if let (Some(&lo), Some(&hi)) = (sizes.first(), sizes.last()) {
        if (hi as f64) < 100.0 * lo as f64 {
            problems.push(format!("n_list must span >= 2 decades, got {lo}..{hi}"));
        }
        if 2 * settings.lag >= lo {
            problems.push(format!(
                "lag {} must be below n/2 for n = {lo}",
                settings.lag
            ));
        }
    }
    if settings.n_reps < 200 {
        problems.push(format!("n_reps must be >= 200, got {}", settings.n_reps));
    }
    if !(settings.h > 0.0) {
        problems.push(format!("h must be > 0, got {}", settings.h));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(problems.join("; ")))
    }
}

/// One replicate series of length `n` for the statistic.
pub fn replicate_series(
    source: SeriesSource<'_>,
    settings: &RateSettings,
    n: usize,
    rep: usize,
) -> Result<Vec<f64>> {
    let mut rng = stream_rng(derive_seed(settings.seed, &[n as u64, rep as u64]), 0);
    match source {
        SeriesSource::IidGaussian => Ok((0..n).map(|_| rng.sample(StandardNormal)).collect()),
        SeriesSource::Model(model) => {
            let (v0, _) = sim::stationary_init(model, settings.h, &settings.sim, &mut rng)?;
            let need_inc = settings.statistic.uses_increments();
            let (mut v, _, inc) =
                sim::simulate_blocks(model, v0, settings.h, n, &settings.sim, need_inc, &mut rng);
            Ok(if need_inc {
                inc
            } else {
                v.remove(0);
                v
            })
        }
    }
}

fn statistic_value(x: &[f64], settings: &RateSettings) -> f64 {
    let centered;
    let x = if settings.centered {
        let m = mean(x);
        centered = x.iter().map(|v| v - m).collect::<Vec<_>>();
        &centered[..]
    } else {
        x
    };
    let g = acv_at(x, settings.lag);
    if settings.statistic.normalized() {
        g / acv_at(x, 0)
    } else {
        g
    }
}

/// Replicated statistic values, one vector per entry of `n_list`.
pub fn replicate_statistic(
    source: SeriesSource<'_>,
    settings: &RateSettings,
) -> Result<Vec<Vec<f64>>> {
    validate(settings)?;
    if let SeriesSource::Model(m) = source {
        m.validate()?;
    }
    let cells: Vec<(usize, usize)> = settings
        .n_list
        .iter()
        .flat_map(|&n| (0..settings.n_reps).map(move |r| (n, r)))
        .collect();
    let values = par_map(cells.len(), |i| {
        let (n, rep) = cells[i];
        replicate_series(source, settings, n, rep).map(|x| statistic_value(&x, settings))
    });
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    Ok(values
        .chunks(settings.n_reps)
        .map(<[f64]>::to_vec)
        .collect())
}

pub fn rate_diagnostic(
    source: SeriesSource<'_>,
    settings: &RateSettings,
) -> Result<RateDiagnostic> {
    let batches = replicate_statistic(source, settings)?;
    let gamma_ref = mean(batches.last().expect("validated non-empty"));
    let points: Vec<RatePoint> = settings
        .n_list
        .iter()
        .zip(&batches)
        .map(|(&n, b)| {
            let dev: Vec<f64> = b.iter().map(|g| g - gamma_ref).collect();
            RatePoint {
                n,
                iqr: iqr(&dev),
                median: quantile(&dev, 0.5),
            }
        })
        .collect();
    if points.iter().any(|p| !(p.iqr > 0.0)) {
        return Err(Error::EstimationUnstable(
            "replicated statistic has zero interquartile range".into(),
        ));
    }
    let x: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.iqr.ln()).collect();
    let LinearFit {
        slope,
        intercept,
        slope_se,
        ci,
    } = ols(&x, &y)?;
    Ok(RateDiagnostic {
        statistic: settings.statistic,
        lag: settings.lag,
        points,
        gamma_ref,
        slope,
        slope_se,
        ci,
        intercept,
    })
}
