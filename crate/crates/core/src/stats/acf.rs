//! Sample autocovariance and autocorrelation.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfEstimate {
    /// `0..=max_lag`.
    pub lags: Vec<usize>,
    pub gamma_hat: Vec<f64>,
    /// `gamma_hat / gamma_hat[0]`; not clamped.
    pub rho_hat: Vec<f64>,
    pub n: usize,
}

/// `gamma(l) = (1/n) sum_{k=1}^{n-l} X_k X_{k+l}` (not mean-corrected).
pub fn sample_acv(data: &[f64], max_lag: usize) -> Result<AcfEstimate> {
    sample_acv_with(data, max_lag, false)
}

/// As [`sample_acv`]; `centered` subtracts the sample mean first.
pub fn sample_acv_with(data: &[f64], max_lag: usize, centered: bool) -> Result<AcfEstimate> {
    let n = data.len();
    if 2 * max_lag >= n {
        return Err(Error::InvalidConfig(format!(
            "max_lag {max_lag} must be below n/2 = {}",
            n as f64 / 2.0
        )));
    }
    let owned;
    let x = if centered {
        let m = data.iter().sum::<f64>() / n as f64;
        owned = data.iter().map(|v| v - m).collect::<Vec<_>>();
        &owned[..]
    } else {
        data
    };
    let gamma_hat: Vec<f64> = (0..=max_lag).map(|l| acv_at(x, l)).collect();
    let rho_hat = gamma_hat.iter().map(|g| g / gamma_hat[0]).collect();
    Ok(AcfEstimate {
        lags: (0..=max_lag).collect(),
        gamma_hat,
        rho_hat,
        n,
    })
}

/// Single-lag value, summed left to right.
pub fn acv_at(x: &[f64], lag: usize) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for k in 0..n - lag {
        s += x[k] * x[k + lag];
    }
    s / n as f64
}
