//! Monte Carlo evaluation of the limit-theory constants built from the
//! exponent process `e^{-alpha xi}` and checks of the two closed identities
//! (window scaling of the sup-gap functional, and its compound-Poisson
//! first-jump representation).
//!
//! Suprema of `e^{-alpha xi}` are exact for compound-Poisson exponents
//! (the path decreases between upward jumps). For Brownian exponents the
//! default [`SupMethod::Bridge`] samples the maximum of the Brownian bridge
//! on every grid step, which is also exact; [`SupMethod::Grid`] uses grid
//! points only and reports a `sqrt(dt)` Richardson extrapolation.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{simulate_xi_events, CogarchParams, EventPath, LevyModel};
use crate::rng::{derive_seed, par_map, stream_rng};
use crate::sim::{self, SimOptions};

/// A Monte Carlo estimate with its audit trail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryConstant {
    pub label: String,
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    /// Truncation horizon of `sup_{s >= t}` functionals (window length otherwise).
    pub horizon: f64,
    /// Grid step; 0 for event-exact and bridge-exact suprema.
    pub dt: f64,
    /// `sqrt(dt)`-Richardson extrapolation, reported for grid suprema.
    pub extrapolated: Option<f64>,
    pub audit: Option<TruncationAudit>,
}

/// Change of the estimate when the truncation (horizon or block count) is
/// doubled on the same paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationAudit {
    pub doubled_value: f64,
    pub shift: f64,
    pub shift_se: f64,
    pub stable: bool,
}

impl TheoryConstant {
    fn from_samples(label: &str, samples: &[f64], horizon: f64, dt: f64) -> Self {
        let (value, std_error) = mean_se(samples);
        TheoryConstant {
            label: label.to_string(),
            value,
            std_error,
            n_paths: samples.len(),
            horizon,
            dt,
            extrapolated: None,
            audit: None,
        }
    }

    /// Error out when the truncation audit flagged instability.
    pub fn require_stable(self) -> Result<Self> {
        match self.audit {
            Some(a) if !a.stable => Err(Error::TruncationWarning {
                label: self.label.clone(),
                shift: a.shift,
                se: self.std_error,
            }),
            _ => Ok(self),
        }
    }
}

/// `lhs` against `rhs`, passing iff `|z| <= 3`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: TheoryConstant,
    pub rhs: TheoryConstant,
    pub z_score: f64,
    pub pass: bool,
}

pub const Z_PASS: f64 = 3.0;

impl IdentityCheck {
    pub fn new(lhs: TheoryConstant, rhs: TheoryConstant) -> Self {
        let se = (lhs.std_error.powi(2) + rhs.std_error.powi(2)).sqrt();
        let diff = lhs.value - rhs.value;
        let z_score = if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        };
        IdentityCheck {
            lhs,
            rhs,
            z_score,
            pass: z_score.abs() <= Z_PASS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupMethod {
    #[default]
    Bridge,
    Grid,
}

/// Monte Carlo settings shared by the path functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSettings {
    pub n_paths: usize,
    pub seed: u64,
    /// Truncation length of `sup_{s >= t}`; default from [`default_tail_horizon`].
    pub horizon: Option<f64>,
    /// Grid step for Brownian exponents. Window endpoints must lie on the grid.
    pub dt: f64,
    /// Euler step (per unit time) for stochastic integrals against Brownian `L`.
    pub integral_steps: usize,
    pub sup_method: SupMethod,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            n_paths: 100_000,
            seed: 0,
            horizon: None,
            dt: 1.0 / 16.0,
            integral_steps: 256,
            sup_method: SupMethod::Bridge,
        }
    }
}

fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / (n - 1.0)
}

/// Truncation length `T*` with `exp(T* Psi(alpha/2)) < 1e-4`.
pub fn default_tail_horizon(model: &LevyModel, alpha: f64) -> Result<f64> {
    let psi = model.laplace_exponent(0.5 * alpha)?;
    if !(psi < 0.0) {
        return Err(Error::PreconditionViolated(format!(
            "Psi(alpha/2) = {psi} is not negative; e^(-alpha xi) does not decay"
        )));
    }
    Ok(1e4f64.ln() / -psi)
}

/// A sampled exponent path supporting window suprema of `-xi` and block
/// integrals `int e^{-xi_{t-}/2} dL_t`.
enum ExponentPath {
    Events(EventPath),
    Grid {
        dt: f64,
        /// `-xi` at grid points.
        neg_xi: Vec<f64>,
        /// Maximum of `-xi` on each step (bridge or endpoint).
        step_max: Vec<f64>,
    },
}

impl ExponentPath {
    fn sample<R: Rng + ?Sized>(
        model: &LevyModel,
        horizon: f64,
        settings: &McSettings,
        dt: f64,
        rng: &mut R,
    ) -> Self {
        match model {
            LevyModel::CogarchCpp(p) => ExponentPath::Events(simulate_xi_events(p, horizon, rng)),
            _ => {
                let b = model.brownian_xi().expect("diffusion family");
                let steps = (horizon / dt).round().max(1.0) as usize;
                let sd = b.sigma * dt.sqrt();
                let bridge = 2.0 * b.sigma * b.sigma * dt;
                let mut neg_xi = Vec::with_capacity(steps + 1);
                let mut step_max = Vec::with_capacity(steps);
                let mut y = 0.0;
                neg_xi.push(y);
                for _ in 0..steps {
                    let z: f64 = rng.sample(StandardNormal);
                    let dy = -(b.drift * dt + sd * z);
                    let peak = match settings.sup_method {
                        SupMethod::Bridge => {
                            let u: f64 = 1.0 - rng.random::<f64>();
                            0.5 * (dy + (dy * dy - bridge * u.ln()).sqrt())
                        }
                        SupMethod::Grid => dy.max(0.0),
                    };
                    step_max.push(y + peak);
                    y += dy;
                    neg_xi.push(y);
                }
                ExponentPath::Grid {
                    dt,
                    neg_xi,
                    step_max,
                }
            }
        }
    }

    /// `sup_{a <= s <= b} (-xi_s)`.
    fn sup_neg_xi(&self, a: f64, b: f64) -> f64 {
        match self {
            ExponentPath::Events(path) => {
                let mut best = -path.xi_at(a);
                let start = path.times.partition_point(|&g| g <= a);
                let mut jumps: f64 = path.log_factors[..start].iter().sum();
                for i in start..path.len() {
                    let g = path.times[i];
                    if g > b {
                        break;
                    }
                    jumps += path.log_factors[i];
                    // e^{-alpha xi} only decreases between jumps.
                    best = best.max(jumps - path.drift * g);
                }
                best
            }
            ExponentPath::Grid { dt, step_max, .. } => {
                let i0 = (a / dt).round() as usize;
                let i1 = ((b / dt).round() as usize).min(step_max.len());
                step_max[i0..i1]
                    .iter()
                    .fold(f64::NEG_INFINITY, |m, &x| m.max(x))
            }
        }
    }

    fn neg_xi_at(&self, t: f64) -> f64 {
        match self {
            ExponentPath::Events(path) => -path.xi_at(t),
            ExponentPath::Grid { dt, neg_xi, .. } => neg_xi[(t / dt).round() as usize],
        }
    }
}

fn check_grid_alignment(model: &LevyModel, dt: f64, points: &[f64]) -> Result<()> {
    if matches!(model, LevyModel::CogarchCpp(_)) {
        return Ok(());
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig(format!("dt must be > 0, got {dt}")));
    }
    for &t in points {
        let k = (t / dt).round();
        if (k * dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "window endpoint {t} is not on the dt = {dt} grid"
            )));
        }
    }
    Ok(())
}

fn check_paths(settings: &McSettings) -> Result<()> {
    if settings.n_paths < 2 {
        return Err(Error::InvalidConfig(
            "need at least 2 Monte Carlo paths".into(),
        ));
    }
    Ok(())
}

fn exact_dt(model: &LevyModel, settings: &McSettings) -> f64 {
    match (model, settings.sup_method) {
        (LevyModel::CogarchCpp(_), _) | (_, SupMethod::Bridge) => 0.0,
        _ => settings.dt,
    }
}

/// Per-path samples of a functional, for each grid resolution needed.
fn sample_functional<F>(
    model: &LevyModel,
    horizon: f64,
    settings: &McSettings,
    seed: u64,
    f: F,
) -> Vec<Vec<f64>>
where
    F: Fn(&ExponentPath) -> Vec<f64> + Sync + Send,
{
    par_map(settings.n_paths, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let path = ExponentPath::sample(model, horizon, settings, settings.dt, &mut rng);
        f(&path)
    })
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

/// Richardson extrapolation for grid suprema: re-run on the coarser grid
/// `2 dt` with the same per-path streams is not path-consistent, so the
/// coarse estimate is taken from every other grid point of the fine path.
fn grid_extrapolation<F>(
    model: &LevyModel,
    horizon: f64,
    settings: &McSettings,
    seed: u64,
    fine_value: f64,
    f: F,
) -> Option<f64>
where
    F: Fn(&ExponentPath) -> f64 + Sync + Send,
{
    if settings.sup_method != SupMethod::Grid || matches!(model, LevyModel::CogarchCpp(_)) {
        return None;
    }
    let coarse: Vec<f64> = par_map(settings.n_paths, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let fine = ExponentPath::sample(model, horizon, settings, settings.dt, &mut rng);
        let ExponentPath::Grid { dt, neg_xi, .. } = fine else {
            unreachable!()
        };
        let thinned: Vec<f64> = neg_xi.iter().step_by(2).copied().collect();
        let step_max = thinned.windows(2).map(|w| w[0].max(w[1])).collect();
        f(&ExponentPath::Grid {
            dt: 2.0 * dt,
            neg_xi: thinned,
            step_max,
        })
    });
    let (coarse_value, _) = mean_se(&coarse);
    let r = std::f64::consts::SQRT_2;
    Some((r * fine_value - coarse_value) / (r - 1.0))
}

/// `E sup_{0 <= s <= h} e^{-alpha xi_s}`.
pub fn mc_sup_exponent(
    model: &LevyModel,
    alpha: f64,
    h: f64,
    settings: &McSettings,
) -> Result<TheoryConstant> {
    Ok(mc_sup_exponent_multi(model, alpha, &[h], settings)?.remove(0))
}

/// [`mc_sup_exponent`] for several windows on common paths.
pub fn mc_sup_exponent_multi(
    model: &LevyModel,
    alpha: f64,
    windows: &[f64],
    settings: &McSettings,
) -> Result<Vec<TheoryConstant>> {
    model.validate()?;
    check_paths(settings)?;
    let horizon = windows.iter().copied().fold(0.0, f64::max);
    if !(horizon > 0.0) || windows.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::InvalidConfig("windows must be > 0".into()));
    }
    check_grid_alignment(model, settings.dt, windows)?;
    let rows = sample_functional(model, horizon, settings, settings.seed, |p| {
        windows
            .iter()
            .map(|&h| (alpha * p.sup_neg_xi(0.0, h).max(0.0)).exp())
            .collect()
    });
    let dt = exact_dt(model, settings);
    Ok(windows
        .iter()
        .enumerate()
        .map(|(j, &h)| {
            let mut c = TheoryConstant::from_samples(
                &format!("E sup_[0,{h}] e^(-alpha xi)"),
                &column(&rows, j),
                h,
                dt,
            );
            c.extrapolated =
                grid_extrapolation(model, horizon, settings, settings.seed, c.value, |p| {
                    (alpha * p.sup_neg_xi(0.0, h).max(0.0)).exp()
                });
            c
        })
        .collect())
}

/// `(sup_{0<=s<=w} e^{-alpha xi_s} - sup_{w<=s<=w+T} e^{-alpha xi_s})^+`.
fn window_gap(p: &ExponentPath, alpha: f64, w: f64, tail: f64) -> f64 {
    let head = (alpha * p.sup_neg_xi(0.0, w).max(0.0)).exp();
    let rest = (alpha * p.sup_neg_xi(w, w + tail)).exp();
    (head - rest).max(0.0)
}

/// `E (sup_{0<=s<=w} e^{-alpha xi} - sup_{s>=w} e^{-alpha xi})^+` with its
/// horizon-doubling audit.
fn window_gap_constant(
    model: &LevyModel,
    alpha: f64,
    w: f64,
    settings: &McSettings,
    seed: u64,
    label: &str,
) -> Result<TheoryConstant> {
    model.validate()?;
    check_paths(settings)?;
    let tail = match settings.horizon {
        Some(t) => t,
        None => default_tail_horizon(model, alpha)?,
    };
    check_grid_alignment(model, settings.dt, &[w])?;
    let tail = align_up(model, settings.dt, tail);
    let rows = sample_functional(model, w + 2.0 * tail, settings, seed, |p| {
        vec![
            window_gap(p, alpha, w, tail),
            window_gap(p, alpha, w, 2.0 * tail),
        ]
    });
    let base = column(&rows, 0);
    let doubled = column(&rows, 1);
    let mut c = TheoryConstant::from_samples(label, &base, w + tail, exact_dt(model, settings));
    c.audit = Some(audit(&base, &doubled, c.std_error));
    c.extrapolated = grid_extrapolation(model, w + 2.0 * tail, settings, seed, c.value, |p| {
        window_gap(p, alpha, w, tail)
    });
    Ok(c)
}

fn align_up(model: &LevyModel, dt: f64, t: f64) -> f64 {
    if matches!(model, LevyModel::CogarchCpp(_)) {
        t
    } else {
        (t / dt).ceil() * dt
    }
}

fn audit(base: &[f64], doubled: &[f64], se: f64) -> TruncationAudit {
    let diffs: Vec<f64> = doubled.iter().zip(base).map(|(d, b)| d - b).collect();
    let (shift, shift_se) = mean_se(&diffs);
    let (doubled_value, _) = mean_se(doubled);
    TruncationAudit {
        doubled_value,
        shift,
        shift_se,
        stable: shift.abs() < se.max(f64::MIN_POSITIVE),
    }
}

/// `kappa = E (sup_{0<=s<=1} e^{-alpha xi_s} - sup_{s>=1} e^{-alpha xi_s})^+`,
/// the constant of the Frechet limit of partial maxima.
pub fn frechet_constant(
    model: &LevyModel,
    alpha: f64,
    settings: &McSettings,
) -> Result<TheoryConstant> {
    window_gap_constant(
        model,
        alpha,
        1.0,
        settings,
        settings.seed,
        "E(sup_[0,1] - sup_[1,inf))^+",
    )
}

/// Extremal index function of `V`,
/// `theta(h) = h kappa / E sup_{0<=s<=h} e^{-alpha xi_s}`, with numerator and
/// denominator on common paths and a delta-method standard error.
pub fn extremal_index_v(
    model: &LevyModel,
    alpha: f64,
    h: f64,
    settings: &McSettings,
) -> Result<TheoryConstant> {
    model.validate()?;
    check_paths(settings)?;
    let tail = match settings.horizon {
        Some(t) => t,
        None => default_tail_horizon(model, alpha)?,
    };
    check_grid_alignment(model, settings.dt, &[h, 1.0])?;
    let tail = align_up(model, settings.dt, tail);
    let horizon = (1.0 + 2.0 * tail).max(h);
    let rows = sample_functional(model, horizon, settings, settings.seed, |p| {
        vec![
            window_gap(p, alpha, 1.0, tail),
            window_gap(p, alpha, 1.0, 2.0 * tail),
            (alpha * p.sup_neg_xi(0.0, h).max(0.0)).exp(),
        ]
    });
    let num = column(&rows, 0);
    let num2 = column(&rows, 1);
    let den = column(&rows, 2);
    let (theta, se) = ratio_estimate(&num, &den, h);
    let (theta2, _) = ratio_estimate(&num2, &den, h);
    let shifts: Vec<f64> = num2.iter().zip(&num).map(|(a, b)| h * (a - b)).collect();
    let (mean_den, _) = mean_se(&den);
    let (shift, shift_se) = mean_se(&shifts);
    Ok(TheoryConstant {
        label: format!("theta_V({h})"),
        value: theta,
        std_error: se,
        n_paths: settings.n_paths,
        horizon: 1.0 + tail,
        dt: exact_dt(model, settings),
        extrapolated: None,
        audit: Some(TruncationAudit {
            doubled_value: theta2,
            shift: shift / mean_den,
            shift_se: shift_se / mean_den,
            stable: (shift / mean_den).abs() < se,
        }),
    })
}

/// `scale * mean(num) / mean(den)` with a delta-method standard error.
fn ratio_estimate(num: &[f64], den: &[f64], scale: f64) -> (f64, f64) {
    let n = num.len() as f64;
    let (mn, sn) = mean_se(num);
    let (md, sd) = mean_se(den);
    let cov = covariance(num, den) / n;
    let ratio = mn / md;
    let var = (sn * sn - 2.0 * ratio * cov + ratio * ratio * sd * sd) / (md * md);
    (scale * ratio, scale * var.max(0.0).sqrt())
}

/// Block integrals `int_{(k-1)h}^{kh} e^{-xi_{t-}/2} dL_t`, `k = 1..=blocks`.
fn block_integrals<R: Rng + ?Sized>(
    model: &LevyModel,
    h: f64,
    blocks: usize,
    settings: &McSettings,
    rng: &mut R,
) -> Vec<f64> {
    match model {
        LevyModel::CogarchCpp(p) => {
            let path = simulate_xi_events(p, h * blocks as f64, rng);
            let mut out = vec![0.0; blocks];
            let mut jumps = 0.0;
            for i in 0..path.len() {
                let g = path.times[i];
                let k = ((g / h).ceil() as usize).clamp(1, blocks) - 1;
                let xi_left = path.drift * g - jumps;
                out[k] += (-0.5 * xi_left).exp() * path.sizes[i];
                jumps += path.log_factors[i];
            }
            out
        }
        _ => {
            let b = model.brownian_xi().expect("diffusion family");
            let steps = ((h * settings.integral_steps as f64).round() as usize).max(1);
            let dt = h / steps as f64;
            let sd = b.sigma * dt.sqrt();
            let root_dt = dt.sqrt();
            let mut xi = 0.0f64;
            (0..blocks)
                .map(|_| {
                    let mut acc = 0.0;
                    for _ in 0..steps {
                        let z: f64 = rng.sample(StandardNormal);
                        let w: f64 = rng.sample(StandardNormal);
                        acc += (-0.5 * xi).exp() * root_dt * w;
                        xi += b.drift * dt + sd * z;
                    }
                    acc
                })
                .collect()
        }
    }
}

/// `E [(int_0^h e^{-xi_{t-}/2} dL_t)^+]^{2 alpha}`.
pub fn tail_constant_i(
    model: &LevyModel,
    alpha: f64,
    h: f64,
    settings: &McSettings,
) -> Result<TheoryConstant> {
    model.validate()?;
    check_paths(settings)?;
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("h must be > 0, got {h}")));
    }
    let samples = par_map(settings.n_paths, |i| {
        let mut rng = stream_rng(settings.seed, i as u64);
        let x = block_integrals(model, h, 1, settings, &mut rng)[0];
        x.max(0.0).powf(2.0 * alpha)
    });
    let dt = match model {
        LevyModel::CogarchCpp(_) => 0.0,
        _ => 1.0 / settings.integral_steps as f64,
    };
    Ok(TheoryConstant::from_samples(
        &format!("E[(int_0^{h} e^(-xi/2) dL)^+]^(2 alpha)"),
        &samples,
        h,
        dt,
    ))
}

/// Extremal index of `(I_k)`:
/// `E(X_1 - max_{2<=k<=K} X_k)^+ / E X_1` with
/// `X_k = [(int_{(k-1)h}^{kh} e^{-xi_{t-}/2} dL_t)^+]^{2 alpha}`; audited by
/// doubling `K` on the same paths.
pub fn extremal_index_i(
    model: &LevyModel,
    alpha: f64,
    h: f64,
    blocks: usize,
    settings: &McSettings,
) -> Result<TheoryConstant> {
    model.validate()?;
    check_paths(settings)?;
    if blocks < 2 {
        return Err(Error::InvalidConfig(
            "block truncation K must be >= 2".into(),
        ));
    }
    let rows = par_map(settings.n_paths, |i| {
        let mut rng = stream_rng(settings.seed, i as u64);
        let xs: Vec<f64> = block_integrals(model, h, 2 * blocks, settings, &mut rng)
            .into_iter()
            .map(|x| x.max(0.0).powf(2.0 * alpha))
            .collect();
        let rest_k = xs[1..blocks].iter().copied().fold(0.0, f64::max);
        let rest_2k = xs[1..].iter().copied().fold(0.0, f64::max);
        vec![(xs[0] - rest_k).max(0.0), (xs[0] - rest_2k).max(0.0), xs[0]]
    });
    let num = column(&rows, 0);
    let num2 = column(&rows, 1);
    let den = column(&rows, 2);
    let (theta, se) = ratio_estimate(&num, &den, 1.0);
    let (theta2, _) = ratio_estimate(&num2, &den, 1.0);
    let (mean_den, _) = mean_se(&den);
    let diffs: Vec<f64> = num2.iter().zip(&num).map(|(a, b)| a - b).collect();
    let (shift, shift_se) = mean_se(&diffs);
    Ok(TheoryConstant {
        label: format!("theta_I(h={h}, K={blocks})"),
        value: theta,
        std_error: se,
        n_paths: settings.n_paths,
        horizon: h * blocks as f64,
        dt: match model {
            LevyModel::CogarchCpp(_) => 0.0,
            _ => 1.0 / settings.integral_steps as f64,
        },
        extrapolated: None,
        audit: Some(TruncationAudit {
            doubled_value: theta2,
            shift: shift / mean_den,
            shift_se: shift_se / mean_den,
            stable: (shift / mean_den).abs() < se,
        }),
    })
}

/// Tail scale `C` in `P(V_0 > x) ~ C x^{-alpha}`. Analytic for Nelson
/// (inverse-gamma law: `C = scale^alpha / (alpha Gamma(alpha))`); other
/// families are estimated with [`tail_scale_c_empirical`].
pub fn tail_scale_c(
    model: &LevyModel,
    alpha: f64,
    empirical: &EmpiricalTailSettings,
) -> Result<TheoryConstant> {
    match model {
        LevyModel::Nelson(p) => {
            let (_, scale) = sim::nelson_stationary_law(p.lambda, p.a, p.sigma);
            if scale <= 0.0 {
                return Err(Error::PreconditionViolated(
                    "degenerate Nelson model has no tail".into(),
                ));
            }
            Ok(TheoryConstant {
                label: "C (inverse-gamma tail)".into(),
                value: nelson_tail_scale(scale, alpha),
                std_error: 0.0,
                n_paths: 0,
                horizon: 0.0,
                dt: 0.0,
                extrapolated: None,
                audit: None,
            })
        }
        _ => tail_scale_c_empirical(model, alpha, empirical),
    }
}

pub fn nelson_tail_scale(scale: f64, alpha: f64) -> f64 {
    scale.powf(alpha) / (alpha * statrs::function::gamma::gamma(alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmpiricalTailSettings {
    pub n: usize,
    pub h: f64,
    pub quantile: f64,
    pub seed: u64,
    pub sim: SimOptions,
}

impl Default for EmpiricalTailSettings {
    fn default() -> Self {
        EmpiricalTailSettings {
            n: 1_000_000,
            h: 1.0,
            quantile: 0.995,
            seed: 0,
            sim: SimOptions {
                subgrid: 16,
                ..SimOptions::default()
            },
        }
    }
}

/// `C_hat = x_q^alpha (1 - q)` from a long stationary skeleton, with a
/// batch-means standard error over 20 contiguous batches. A Hill plateau
/// gate (estimates at `k/2, k, 2k` within 25% of each other) guards the fit.
pub fn tail_scale_c_empirical(
    model: &LevyModel,
    alpha: f64,
    settings: &EmpiricalTailSettings,
) -> Result<TheoryConstant> {
    const BATCHES: usize = 20;
    let series =
        sim::simulate_skeleton(model, settings.h, settings.n, &settings.sim, settings.seed)?;
    let data = series.v_blocks();
    let n = data.len();
    let k = ((1.0 - settings.quantile) * n as f64).round() as usize;
    if k < 2 * BATCHES || 2 * k >= n {
        return Err(Error::InsufficientData(format!(
            "{k} upper order statistics out of {n} cannot support the tail fit"
        )));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let hill = |k: usize| -> f64 {
        let base = sorted[k].ln();
        k as f64 / sorted[..k].iter().map(|x| x.ln() - base).sum::<f64>()
    };
    let plateau = [hill(k / 2), hill(k), hill(2 * k)];
    let (lo, hi) = plateau
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
    if !(hi / lo <= 1.25) {
        return Err(Error::EstimationUnstable(format!(
            "Hill estimates {plateau:?} at k = {}, {k}, {} show no plateau",
            k / 2,
            2 * k
        )));
    }
    let threshold = sorted[k];
    let batch_len = n / BATCHES;
    let batch_c: Vec<f64> = (0..BATCHES)
        .map(|b| {
            let chunk = &data[b * batch_len..(b + 1) * batch_len];
            let exceed = chunk.iter().filter(|&&x| x > threshold).count();
            threshold.powf(alpha) * exceed as f64 / batch_len as f64
        })
        .collect();
    let exceed = data.iter().filter(|&&x| x > threshold).count();
    let (_, se) = mean_se(&batch_c);
    Ok(TheoryConstant {
        label: "C (empirical tail)".into(),
        value: threshold.powf(alpha) * exceed as f64 / n as f64,
        std_error: se,
        n_paths: n,
        horizon: settings.h * n as f64,
        dt: 0.0,
        extrapolated: None,
        audit: None,
    })
}

/// `a_n = (C n)^{1/alpha}`, so that `n C (a_n x)^{-alpha} = x^{-alpha}`.
pub fn normalizer_a_n(c: f64, alpha: f64, n: f64) -> Result<f64> {
    if !(c > 0.0 && alpha > 0.0 && n > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "normalizer needs C > 0, alpha > 0, n > 0 (got {c}, {alpha}, {n})"
        )));
    }
    Ok((c * n).powf(1.0 / alpha))
}

fn require_root(model: &LevyModel, alpha: f64) -> Result<()> {
    let psi = model.laplace_exponent(alpha)?;
    let scale = model.laplace_exponent(2.0 * alpha)?.abs().max(1.0);
    if psi.abs() > 1e-9 * scale {
        return Err(Error::PreconditionViolated(format!(
            "E exp(-alpha xi_1) != 1: Psi({alpha}) = {psi}"
        )));
    }
    Ok(())
}

/// Window scaling of the sup-gap functional:
/// `E(sup_{[0,h]} - sup_{[h,inf)})^+ = h E(sup_{[0,1]} - sup_{[1,inf)})^+`
/// for `e^{-alpha xi}` when `Psi(alpha) = 0`. Sides use independent path
/// sets, except at `h = 1` where they share paths.
pub fn verify_window_scaling(
    model: &LevyModel,
    alpha: f64,
    h: f64,
    settings: &McSettings,
) -> Result<IdentityCheck> {
    require_root(model, alpha)?;
    if !(h > 0.0) {
        return Err(Error::InvalidConfig(format!("h must be > 0, got {h}")));
    }
    let (lhs_seed, rhs_seed) = if h == 1.0 {
        (settings.seed, settings.seed)
    } else {
        (
            derive_seed(settings.seed, &[1]),
            derive_seed(settings.seed, &[2]),
        )
    };
    let lhs = window_gap_constant(
        model,
        alpha,
        h,
        settings,
        lhs_seed,
        &format!("E(sup_[0,{h}] - sup_[{h},inf))^+"),
    )?;
    let mut rhs = window_gap_constant(
        model,
        alpha,
        1.0,
        settings,
        rhs_seed,
        &format!("{h} * E(sup_[0,1] - sup_[1,inf))^+"),
    )?;
    rhs.value *= h;
    rhs.std_error *= h;
    rhs.extrapolated = rhs.extrapolated.map(|x| h * x);
    Ok(IdentityCheck::new(lhs, rhs))
}

/// Closed forms of both sides of the window-scaling functional for a pure
/// drift exponent `xi_t = c t`: `(1 - e^{-alpha c h}, h (1 - e^{-alpha c}))`.
pub fn drift_window_gaps(c: f64, alpha: f64, h: f64) -> (f64, f64) {
    (-(-alpha * c * h).exp_m1(), -h * (-alpha * c).exp_m1())
}

/// Window-gap functional without the root precondition (for negative controls).
pub fn window_gap_unchecked(
    model: &LevyModel,
    alpha: f64,
    w: f64,
    settings: &McSettings,
) -> Result<TheoryConstant> {
    window_gap_constant(model, alpha, w, settings, settings.seed, "window gap")
}

/// `E exp(-alpha c Gamma_1) = mu / (mu + alpha c)` for the first arrival of
/// a rate-`mu` Poisson process.
pub fn first_jump_discount(mu: f64, alpha: f64, c: f64) -> f64 {
    mu / (mu + alpha * c)
}

/// Compound-Poisson representation of the Frechet constant:
/// `kappa = mu (E e^{-alpha c Gamma_1})^{-1} E(1 - sup_{s>=Gamma_1} e^{-alpha xi_s})^+`.
pub fn verify_first_jump_identity(
    params: &CogarchParams,
    alpha: f64,
    settings: &McSettings,
) -> Result<IdentityCheck> {
    let model = LevyModel::CogarchCpp(*params);
    require_root(&model, alpha)?;
    if params.mu <= 0.0 {
        return Err(Error::PreconditionViolated(
            "compound Poisson rate mu must be > 0".into(),
        ));
    }
    check_paths(settings)?;
    let lhs = window_gap_constant(
        &model,
        alpha,
        1.0,
        settings,
        derive_seed(settings.seed, &[1]),
        "E(sup_[0,1] - sup_[1,inf))^+",
    )?;
    let tail = match settings.horizon {
        Some(t) => t,
        None => default_tail_horizon(&model, alpha)?,
    };
    let rows = post_jump_gap_samples(
        params,
        alpha,
        tail,
        settings,
        derive_seed(settings.seed, &[2]),
    );
    let factor = params.mu / first_jump_discount(params.mu, alpha, params.c);
    let scaled: Vec<f64> = column(&rows, 0).iter().map(|x| factor * x).collect();
    let scaled2: Vec<f64> = column(&rows, 1).iter().map(|x| factor * x).collect();
    let mut rhs = TheoryConstant::from_samples(
        "mu (E e^(-alpha c Gamma_1))^(-1) E(1 - sup_[Gamma_1,inf))^+",
        &scaled,
        tail,
        0.0,
    );
    rhs.audit = Some(audit(&scaled, &scaled2, rhs.std_error));
    Ok(IdentityCheck::new(lhs, rhs))
}

/// Per path: `(1 - sup_{Gamma_1 <= s <= Gamma_1 + T} e^{-alpha xi_s})^+` for
/// truncation `T` and `2T`.
fn post_jump_gap_samples(
    params: &CogarchParams,
    alpha: f64,
    tail: f64,
    settings: &McSettings,
    seed: u64,
) -> Vec<Vec<f64>> {
    par_map(settings.n_paths, |i| {
        let mut rng = stream_rng(seed, i as u64);
        let first: f64 = Exp::new(params.mu).expect("positive rate").sample(&mut rng);
        let path = ExponentPath::Events(simulate_xi_events(params, first + 2.0 * tail, &mut rng));
        // Jump at `first` is prepended: the sampled path starts after it.
        let z = params.jump_law.sample(&mut rng);
        let at_jump = params.c * first - params.log_factor(z);
        let gap = |t: f64| {
            let later = path.sup_neg_xi(0.0, t);
            let sup = (-at_jump).max(-at_jump + later);
            (1.0 - (alpha * sup).exp()).max(0.0)
        };
        vec![gap(tail), gap(2.0 * tail)]
    })
}

/// `exp(-alpha xi)` just after time `t`, exposed for tests.
#[doc(hidden)]
pub fn sample_exponent_at(model: &LevyModel, t: f64, settings: &McSettings, stream: u64) -> f64 {
    let mut rng = stream_rng(settings.seed, stream);
    let p = ExponentPath::sample(model, t.max(settings.dt), settings, settings.dt, &mut rng);
    p.neg_xi_at(t)
}
