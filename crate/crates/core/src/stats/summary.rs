//! Descriptive statistics, goodness-of-fit distances and least squares.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Mean and its standard error.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let m = mean(x);
    if x.len() < 2 {
        return (m, 0.0);
    }
    (m, (variance(x) / x.len() as f64).sqrt())
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn central_moment(x: &[f64], m: f64, p: i32) -> f64 {
    x.iter().map(|v| (v - m).powi(p)).sum::<f64>() / x.len() as f64
}

/// Moment skewness `m3 / m2^{3/2}`.
pub fn skewness(x: &[f64]) -> f64 {
    let m = mean(x);
    central_moment(x, m, 3) / central_moment(x, m, 2).powf(1.5)
}

/// Moment excess kurtosis `m4 / m2^2 - 3`.
pub fn excess_kurtosis(x: &[f64]) -> f64 {
    let m = mean(x);
    central_moment(x, m, 4) / central_moment(x, m, 2).powi(2) - 3.0
}

/// Sorted copy, NaN-free input assumed.
pub fn sorted(x: &[f64]) -> Vec<f64> {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// Linear-interpolation quantile of an ascending sample (Hyndman-Fan type 7).
pub fn quantile_sorted(s: &[f64], q: f64) -> f64 {
    let n = s.len();
    if n == 1 {
        return s[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
}

pub fn quantile(x: &[f64], q: f64) -> f64 {
    quantile_sorted(&sorted(x), q)
}

pub fn iqr(x: &[f64]) -> f64 {
    let s = sorted(x);
    quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25)
}

/// `sup_x |F_n(x) - F(x)|` for a continuous reference CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(x: &[f64], cdf: F) -> f64 {
    let s = sorted(x);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |d, (i, &v)| {
        let f = cdf(v);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> f64 {
    let (a, b) = (sorted(x), sorted(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic p-value `P(sqrt(n) D > sqrt(n) d)` from the Kolmogorov law.
pub fn kolmogorov_pvalue(d: f64, n_eff: f64) -> f64 {
    let t = (n_eff.sqrt() + 0.12 + 0.11 / n_eff.sqrt()) * d;
    if t < 0.2 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * t * t).exp();
        p += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Ordinary least squares fit `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// Two-sided 95% Student-t interval for the slope.
    pub ci: (f64, f64),
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return Err(Error::InsufficientData(format!(
            "least squares needs >= 3 paired points, got {n} and {}",
            y.len()
        )));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("regressor has no spread".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let dof = (n - 2) as f64;
    let slope_se = (rss / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    Ok(LinearFit {
        slope,
        intercept,
        slope_se,
        ci: (slope - t * slope_se, slope + t * slope_se),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let x = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&x, 0.0), 1.0);
        assert_eq!(quantile(&x, 1.0), 4.0);
        assert_eq!(quantile(&x, 0.5), 2.5);
        assert_eq!(iqr(&x), 1.5);
    }

    #[test]
    fn moments_of_symmetric_sample() {
        let x = [-2.0, -1.0, 0.0, 1.0, 2.0];
        assert_eq!(skewness(&x), 0.0);
        // m2 = 2, m4 = 34/5.
        assert!((excess_kurtosis(&x) - (6.8 / 4.0 - 3.0)).abs() < 1e-15);
        assert_eq!(variance(&x), 2.5);
    }

    #[test]
    fn ks_against_uniform() {
        let x = [0.1, 0.3, 0.5, 0.7, 0.9];
        let d = ks_one_sample(&x, |v| v.clamp(0.0, 1.0));
        assert!((d - 0.1).abs() < 1e-15);
        assert_eq!(ks_two_sample(&x, &x), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
    }

    #[test]
    fn kolmogorov_tail() {
        // Critical value 1.358 at the 5% level.
        let p = kolmogorov_pvalue(1.358 / 1e4f64.sqrt(), 1e4);
        assert!((p - 0.05).abs() < 2e-3, "{p}");
        assert_eq!(kolmogorov_pvalue(0.0, 100.0), 1.0);
    }

    #[test]
    fn ols_recovers_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let fit = ols(&x, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-14);
        assert!((fit.intercept - 1.0).abs() < 1e-14);
        assert!(fit.slope_se < 1e-12);
        assert!(ols(&[1.0, 1.0, 1.0], &y[..3]).is_err());
    }
}
