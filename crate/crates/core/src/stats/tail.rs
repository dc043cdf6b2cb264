//! Tail index and tail-ratio estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::summary::{quantile_sorted, sorted};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub alpha_hat: f64,
    pub k_order: usize,
    pub se: f64,
    /// The `(k+1)`-th largest observation.
    pub threshold: f64,
}

/// Default number of upper order statistics, `n^0.6`.
pub fn default_k_order(n: usize) -> usize {
    (n as f64).powf(0.6).round() as usize
}

fn descending_positive(data: &[f64], k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::InsufficientData(format!(
            "k_order must be >= 2, got {k}"
        )));
    }
    if data.iter().any(|x| x.is_nan()) {
        return Err(Error::NonPositiveData("data contains NaN".into()));
    }
    let mut desc: Vec<f64> = data.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    if desc.len() < k + 1 {
        return Err(Error::InsufficientData(format!(
            "need at least {} observations, got {}",
            k + 1,
            desc.len()
        )));
    }
    if !(desc[k] > 0.0) {
        return Err(Error::NonPositiveData(format!(
            "the {} largest observations must be positive",
            k + 1
        )));
    }
    Ok(desc)
}

fn hill_from_desc(desc: &[f64], k: usize) -> Result<TailEstimate> {
    // Ratios keep the estimate exactly invariant under power-of-two rescaling.
    let base = desc[k];
    let mean_log = desc[..k].iter().map(|x| (x / base).ln()).sum::<f64>() / k as f64;
    if !(mean_log > 0.0) {
        return Err(Error::InsufficientData(format!(
            "the {} largest observations are tied; the Hill sum vanishes",
            k + 1
        )));
    }
    let alpha_hat = 1.0 / mean_log;
    Ok(TailEstimate {
        alpha_hat,
        k_order: k,
        se: alpha_hat / (k as f64).sqrt(),
        threshold: desc[k],
    })
}

/// Hill estimator on the `k` largest observations.
pub fn hill_estimator(data: &[f64], k_order: usize) -> Result<TailEstimate> {
    let desc = descending_positive(data, k_order)?;
    hill_from_desc(&desc, k_order)
}

/// Hill estimates for each `k` in `ks` from one sort.
pub fn hill_path(data: &[f64], ks: &[usize]) -> Result<Vec<TailEstimate>> {
    let kmax = ks.iter().copied().max().unwrap_or(2);
    let desc = descending_positive(data, kmax)?;
    ks.iter()
        .map(|&k| {
            if k < 2 {
                return Err(Error::InsufficientData(format!(
                    "k_order must be >= 2, got {k}"
                )));
            }
            hill_from_desc(&desc, k)
        })
        .collect()
}

/// Map applied to the numerator quantile before counting denominator exceedances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailTransform {
    #[default]
    Identity,
    Square,
}

impl TailTransform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            TailTransform::Identity => x,
            TailTransform::Square => x * x,
        }
    }
}

pub const MIN_TAIL_EXCEEDANCES: usize = 200;

/// `P_hat(num > x_q) / P_hat(den > T(x_q))` with `x_q` the `q`-quantile of `num`.
pub fn tail_ratio(num: &[f64], den: &[f64], q: f64, transform: TailTransform) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "quantile level must lie in (0,1), got {q}"
        )));
    }
    if num.is_empty() || den.is_empty() {
        return Err(Error::TooFewExceedances {
            found: 0,
            needed: MIN_TAIL_EXCEEDANCES,
        });
    }
    let x = quantile_sorted(&sorted(num), q);
    let y = transform.apply(x);
    let count_num = num.iter().filter(|&&v| v > x).count();
    let count_den = den.iter().filter(|&&v| v > y).count();
    let found = count_num.min(count_den);
    if found < MIN_TAIL_EXCEEDANCES {
        return Err(Error::TooFewExceedances {
            found,
            needed: MIN_TAIL_EXCEEDANCES,
        });
    }
    Ok((count_num as f64 / num.len() as f64) / (count_den as f64 / den.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pareto_grid(n: usize, alpha: f64) -> Vec<f64> {
        (1..=n)
            .map(|i| (n as f64 / i as f64).powf(1.0 / alpha))
            .collect()
    }

    #[test]
    fn hill_on_pareto_quantile_grid() {
        let x = pareto_grid(10_000, 2.0);
        let est = hill_estimator(&x, 100).unwrap();
        assert!((est.alpha_hat / 2.0 - 1.0).abs() < 0.15, "{est:?}");
        assert_eq!(est.k_order, 100);
        assert!((est.se - est.alpha_hat / 10.0).abs() < 1e-15);
        assert_eq!(est.threshold, x[100]);
    }

    #[test]
    fn hill_rejects_degenerate_inputs() {
        assert!(matches!(
            hill_estimator(&[3.0; 50], 10),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            hill_estimator(&[1.0, 2.0, 0.0, -1.0], 3),
            Err(Error::NonPositiveData(_))
        ));
        assert!(matches!(
            hill_estimator(&[1.0, 2.0, 3.0], 3),
            Err(Error::InsufficientData(_))
        ));
        assert!(hill_estimator(&[1.0, 2.0, 3.0], 1).is_err());
    }

    #[test]
    fn hill_path_matches_pointwise() {
        let x = pareto_grid(1000, 1.5);
        let path = hill_path(&x, &[10, 50, 100]).unwrap();
        assert_eq!(path[1], hill_estimator(&x, 50).unwrap());
    }

    #[test]
    fn tail_ratio_of_identical_samples_is_one() {
        let x = pareto_grid(100_000, 2.0);
        assert_eq!(
            tail_ratio(&x, &x, 0.99, TailTransform::Identity).unwrap(),
            1.0
        );
    }

    #[test]
    fn tail_ratio_square_transform() {
        // num = sqrt(den) pointwise: P(sqrt(V) > x) = P(V > x^2).
        let den = pareto_grid(100_000, 1.0);
        let num: Vec<f64> = den.iter().map(|v| v.sqrt()).collect();
        let r = tail_ratio(&num, &den, 0.99, TailTransform::Square).unwrap();
        assert!((r - 1.0).abs() < 1e-2, "{r}");
    }

    #[test]
    fn tail_ratio_needs_exceedances() {
        let x = pareto_grid(1000, 2.0);
        assert!(matches!(
            tail_ratio(&x, &x, 0.99, TailTransform::Identity),
            Err(Error::TooFewExceedances { .. })
        ));
    }
}
