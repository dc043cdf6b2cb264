//! Parametric driving triples `(xi, eta, L)`, their Laplace exponents, the
//! tail-index root and the moment conditions that make the stationary
//! volatility heavy tailed.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Roots above this value are treated as "no root in the searchable domain".
pub const MAX_ALPHA: f64 = 1.0e6;

/// Law of the jump sizes `Z` of a compound Poisson driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLaw {
    /// `+z` or `-z` with probability one half each.
    TwoPoint { z: f64 },
    /// Centred normal with standard deviation `sd`.
    Gaussian { sd: f64 },
    /// Always `+z`.
    DeterministicAbs { z: f64 },
}

impl JumpLaw {
    pub fn validate(&self) -> Result<()> {
        let (name, value) = match *self {
            JumpLaw::TwoPoint { z } => ("z", z),
            JumpLaw::Gaussian { sd } => ("sd", sd),
            JumpLaw::DeterministicAbs { z } => ("z", z),
        };
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidModel(format!(
                "jump law {name} must be finite and > 0, got {value}"
            )));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            JumpLaw::TwoPoint { z } => {
                if rng.random::<bool>() {
                    z
                } else {
                    -z
                }
            }
            JumpLaw::Gaussian { sd } => sd * rng.sample::<f64, _>(StandardNormal),
            JumpLaw::DeterministicAbs { z } => z,
        }
    }

    /// `E|Z|^p` for `p >= 0`, in closed form.
    pub fn abs_moment(&self, p: f64) -> f64 {
        match *self {
            JumpLaw::TwoPoint { z } | JumpLaw::DeterministicAbs { z } => z.powf(p),
            JumpLaw::Gaussian { sd } => {
                use statrs::function::gamma::gamma;
                sd.powf(p) * 2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0)
                    / std::f64::consts::PI.sqrt()
            }
        }
    }

    /// Largest order `p` with `E|Z|^p < infinity`. All supported laws have
    /// every moment.
    pub fn moment_bound(&self) -> f64 {
        f64::INFINITY
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self, JumpLaw::DeterministicAbs { .. })
    }

    /// `E (1 + k Z^2)^v`.
    pub fn factor_moment(&self, k: f64, v: f64) -> Result<f64> {
        if v > 0.0 && 2.0 * v > self.moment_bound() {
            return Err(Error::Domain(format!(
                "E|Z|^{} is infinite for this jump law",
                2.0 * v
            )));
        }
        Ok(match *self {
            JumpLaw::TwoPoint { z } | JumpLaw::DeterministicAbs { z } => (1.0 + k * z * z).powf(v),
            JumpLaw::Gaussian { sd } => gaussian_factor_moment(k * sd * sd, v),
        })
    }
}

/// `E (1 + s X^2)^v` for standard normal `X`, by composite Gauss-Legendre
/// quadrature on `[0, U]` (the integrand is even).
fn gaussian_factor_moment(s: f64, v: f64) -> f64 {
    if s == 0.0 || v == 0.0 {
        return 1.0;
    }
    let (nodes, weights) = gauss_legendre_16();
    let upper = (2.0 * v.max(0.0)).sqrt() + 40.0;
    let panels = 400;
    let width = upper / panels as f64;
    let norm = (2.0 / std::f64::consts::PI).sqrt();
    let mut total = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        let mut panel = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            let t = mid + 0.5 * width * x;
            panel += w * (v * (s * t * t).ln_1p() - 0.5 * t * t).exp();
        }
        total += 0.5 * width * panel;
    }
    norm * total
}

fn gauss_legendre_16() -> &'static ([f64; 16], [f64; 16]) {
    static RULE: OnceLock<([f64; 16], [f64; 16])> = OnceLock::new();
    RULE.get_or_init(|| {
        const N: usize = 16;
        let mut nodes = [0.0; N];
        let mut weights = [0.0; N];
        for i in 0..N {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=N {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// Nelson diffusion: `xi_t = -sigma W_t + (sigma^2/2 + lambda) t`,
/// `eta_t = lambda a t`, `L` an independent Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NelsonParams {
    pub lambda: f64,
    pub a: f64,
    pub sigma: f64,
}

/// COGARCH(1,1) driven by a compound Poisson process of rate `mu`:
/// `xi_t = c t - sum log(1 + lambda_g e^c Z_k^2)`, `eta_t = beta t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CogarchParams {
    pub beta: f64,
    pub c: f64,
    pub lambda_g: f64,
    pub mu: f64,
    pub jump_law: JumpLaw,
}

/// Brownian exponent test model: `xi_t = sigma W_t + m t`,
/// `eta_t = eta_rate t`, `L` an independent Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrownianParams {
    pub m: f64,
    pub sigma: f64,
    pub eta_rate: f64,
}

impl CogarchParams {
    /// Model whose every jump multiplies the volatility by `e^log_factor`
    /// (unit deterministic jumps, `lambda_g` solved from the factor).
    pub fn with_log_factor(beta: f64, c: f64, mu: f64, log_factor: f64) -> Self {
        CogarchParams {
            beta,
            c,
            lambda_g: log_factor.exp_m1() * (-c).exp(),
            mu,
            jump_law: JumpLaw::DeterministicAbs { z: 1.0 },
        }
    }

    /// Coefficient `k = lambda_g e^c` of `Z^2` in the jump factor.
    pub fn factor_scale(&self) -> f64 {
        self.lambda_g * self.c.exp()
    }

    /// Multiplicative volatility jump `1 + k z^2` caused by an `L`-jump `z`.
    pub fn jump_factor(&self, z: f64) -> f64 {
        1.0 + self.factor_scale() * z * z
    }

    /// `log(1 + k z^2)`, the downward jump of `xi`.
    pub fn log_factor(&self, z: f64) -> f64 {
        (self.factor_scale() * z * z).ln_1p()
    }
}

/// `xi_t = drift t + sigma B_t` for a standard Brownian motion `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrownianXi {
    pub drift: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LevyModel {
    Nelson(NelsonParams),
    CogarchCpp(CogarchParams),
    BrownianExponent(BrownianParams),
}

impl LevyModel {
    pub fn nelson(lambda: f64, a: f64, sigma: f64) -> Self {
        LevyModel::Nelson(NelsonParams { lambda, a, sigma })
    }

    pub fn cogarch(beta: f64, c: f64, lambda_g: f64, mu: f64, jump_law: JumpLaw) -> Self {
        LevyModel::CogarchCpp(CogarchParams {
            beta,
            c,
            lambda_g,
            mu,
            jump_law,
        })
    }

    pub fn brownian(m: f64, sigma: f64, eta_rate: f64) -> Self {
        LevyModel::BrownianExponent(BrownianParams { m, sigma, eta_rate })
    }

    pub fn family(&self) -> &'static str {
        match self {
            LevyModel::Nelson(_) => "nelson",
            LevyModel::CogarchCpp(_) => "cogarch_cpp",
            LevyModel::BrownianExponent(_) => "brownian_exponent",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                bad.push(format!("{name} must be finite and > 0, got {v}"));
            }
        };
        match *self {
            LevyModel::Nelson(p) => {
                positive("lambda", p.lambda);
                positive("sigma", p.sigma);
                if !(p.a.is_finite() && p.a >= 0.0) {
                    bad.push(format!("a must be finite and >= 0, got {}", p.a));
                }
            }
            LevyModel::CogarchCpp(p) => {
                positive("c", p.c);
                for (name, v) in [("beta", p.beta), ("lambda_g", p.lambda_g), ("mu", p.mu)] {
                    if !(v.is_finite() && v >= 0.0) {
                        bad.push(format!("{name} must be finite and >= 0, got {v}"));
                    }
                }
                if let Err(e) = p.jump_law.validate() {
                    bad.push(e.to_string());
                }
            }
            LevyModel::BrownianExponent(p) => {
                positive("sigma", p.sigma);
                if !p.m.is_finite() {
                    bad.push(format!("m must be finite, got {}", p.m));
                }
                if !(p.eta_rate.is_finite() && p.eta_rate >= 0.0) {
                    bad.push(format!(
                        "eta_rate must be finite and >= 0, got {}",
                        p.eta_rate
                    ));
                }
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(bad.join("; ")))
        }
    }

    /// Drift rate of the subordinator `eta`.
    pub fn eta_rate(&self) -> f64 {
        match *self {
            LevyModel::Nelson(p) => p.lambda * p.a,
            LevyModel::CogarchCpp(p) => p.beta,
            LevyModel::BrownianExponent(p) => p.eta_rate,
        }
    }

    /// Brownian representation of `xi` for the diffusion families.
    pub fn brownian_xi(&self) -> Option<BrownianXi> {
        match *self {
            LevyModel::Nelson(p) => Some(BrownianXi {
                drift: 0.5 * p.sigma * p.sigma + p.lambda,
                sigma: p.sigma,
            }),
            LevyModel::BrownianExponent(p) => Some(BrownianXi {
                drift: p.m,
                sigma: p.sigma,
            }),
            LevyModel::CogarchCpp(_) => None,
        }
    }

    /// Whether `(xi, eta, L)` and `(xi, eta, -L)` share a law, which makes
    /// the increments `I_k` symmetric and uncorrelated.
    pub fn driver_symmetric(&self) -> bool {
        match self {
            LevyModel::Nelson(_) | LevyModel::BrownianExponent(_) => true,
            LevyModel::CogarchCpp(p) => p.jump_law.is_symmetric(),
        }
    }

    /// Short stable hash of the model parameters, used as provenance tag.
    pub fn model_id(&self) -> String {
        let text = toml::to_string(self).unwrap_or_else(|_| format!("{self:?}"));
        let digest = Sha256::digest(text.as_bytes());
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        format!("{}-{}", self.family(), hex)
    }

    /// `Psi_xi(v) = log E exp(-v xi_1)`.
    pub fn laplace_exponent(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(Error::Domain(format!(
                "exponent argument {v} is not finite"
            )));
        }
        if v == 0.0 {
            return Ok(0.0);
        }
        match *self {
            LevyModel::CogarchCpp(p) => {
                let moment = p.jump_law.factor_moment(p.factor_scale(), v)?;
                Ok(-v * p.c + p.mu * (moment - 1.0))
            }
            _ => {
                let b = self.brownian_xi().expect("diffusion family");
                Ok(-b.drift * v + 0.5 * b.sigma * b.sigma * v * v)
            }
        }
    }

    /// Right derivative of the Laplace exponent at 0.
    pub fn exponent_slope_at_zero(&self) -> Result<f64> {
        match *self {
            LevyModel::CogarchCpp(_) => {
                let eps = 1e-7;
                Ok(self.laplace_exponent(eps)? / eps)
            }
            _ => Ok(-self.brownian_xi().expect("diffusion family").drift),
        }
    }

    /// The unique positive root `alpha` of the Laplace exponent.
    ///
    /// Brackets geometrically from `hint` (default 1) and bisects; strict
    /// convexity makes the positive root unique whenever the slope at 0 is
    /// negative.
    pub fn find_alpha(&self, hint: Option<f64>) -> Result<f64> {
        self.validate()?;
        let slope = self.exponent_slope_at_zero()?;
        if slope >= 0.0 {
            return Err(Error::NotStationaryHeavyTail { slope });
        }
        let psi = |v: f64| self.laplace_exponent(v).unwrap_or(f64::INFINITY);

        let mut hi = hint.filter(|h| h.is_finite() && *h > 0.0).unwrap_or(1.0);
        let mut lo = 0.0;
        if psi(hi) < 0.0 {
            while psi(hi) < 0.0 {
                lo = hi;
                hi *= 2.0;
                if hi > MAX_ALPHA {
                    return Err(Error::NoPositiveRoot {
                        searched: MAX_ALPHA,
                    });
                }
            }
        } else {
            // Shrink towards zero until the left end is strictly negative.
            loop {
                let mid = 0.5 * hi;
                if psi(mid) < 0.0 {
                    lo = mid;
                    break;
                }
                hi = mid;
                if hi < 1e-300 {
                    return Err(Error::NoPositiveRoot {
                        searched: MAX_ALPHA,
                    });
                }
            }
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let value = psi(mid);
            if value == 0.0 {
                return Ok(mid);
            }
            if value < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(if psi(lo).abs() <= psi(hi).abs() {
            lo
        } else {
            hi
        })
    }

    /// Sufficient moment conditions for a Pareto-like stationary law (A),
    /// the recurrence moment condition (B) and the integrated-process
    /// condition (C), evaluated in closed form for moment order `d`.
    pub fn check_conditions(&self, d: f64) -> ConditionReport {
        let alpha = self.find_alpha(None).ok();
        let mut detail = Vec::new();
        detail.push(ConditionCheck {
            name: "exponent root",
            holds: alpha.is_some(),
            note: match alpha {
                Some(a) => format!("Psi(alpha) = 0 at alpha = {a}"),
                None => "no positive root of the Laplace exponent".into(),
            },
        });
        let d_ok = d.is_finite() && d > 0.0 && alpha.is_some_and(|a| d > a);
        let psi_d_finite = d.is_finite() && self.laplace_exponent(d).is_ok_and(|p| p.is_finite());
        detail.push(ConditionCheck {
            name: "moment order above root",
            holds: d_ok && psi_d_finite,
            note: format!("d = {d} must exceed alpha with Psi(d) finite"),
        });

        let (suff_a, suff_b, suff_c) = match *self {
            LevyModel::Nelson(_) | LevyModel::BrownianExponent(_) => {
                detail.push(ConditionCheck {
                    name: "exponential moments of xi, moments of eta",
                    holds: true,
                    note: "Gaussian xi and deterministic eta have all moments".into(),
                });
                detail.push(ConditionCheck {
                    name: "moments of L",
                    holds: true,
                    note: "Brownian L has all moments".into(),
                });
                (true, true, true)
            }
            LevyModel::CogarchCpp(p) => {
                let bound = p.jump_law.moment_bound();
                let some_d = alpha.is_some_and(|a| bound > 2.0 * a);
                let two_d = 2.0 * d <= bound;
                let four_d = (4.0 * d).max(1.0) <= bound;
                detail.push(ConditionCheck {
                    name: "non-zero drift of finite-variation xi",
                    holds: p.c != 0.0,
                    note: format!("c = {}", p.c),
                });
                detail.push(ConditionCheck {
                    name: "L moment of order 2d",
                    holds: two_d,
                    note: format!("E|Z|^{} = {}", 2.0 * d, p.jump_law.abs_moment(2.0 * d)),
                });
                detail.push(ConditionCheck {
                    name: "L moment of order max(4d, 1)",
                    holds: four_d,
                    note: format!(
                        "E|Z|^{} = {}",
                        (4.0 * d).max(1.0),
                        p.jump_law.abs_moment((4.0 * d).max(1.0))
                    ),
                });
                (some_d && p.c != 0.0, two_d, four_d)
            }
        };
        let holds_a = alpha.is_some() && suff_a;
        let holds_b = holds_a && d_ok && psi_d_finite && suff_b;
        let holds_c = holds_b && suff_c;
        ConditionReport {
            alpha,
            d,
            holds_a,
            holds_b,
            holds_c,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub holds: bool,
    pub note: String,
}

/// Outcome of the moment-condition checks; `holds_c => holds_b => holds_a`
/// and `holds_a` implies the root exists.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub alpha: Option<f64>,
    pub d: f64,
    pub holds_a: bool,
    pub holds_b: bool,
    pub holds_c: bool,
    pub detail: Vec<ConditionCheck>,
}

/// Exact event representation of a compound-Poisson driven exponent on
/// `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventPath {
    pub horizon: f64,
    pub drift: f64,
    /// Jump times `Gamma_1 < Gamma_2 < ... <= horizon`.
    pub times: Vec<f64>,
    /// Jump sizes `Z_k` of `L`.
    pub sizes: Vec<f64>,
    /// Downward jumps `log(1 + k Z_k^2)` of `xi`.
    pub log_factors: Vec<f64>,
}

impl EventPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Right-continuous value `xi_t`.
    pub fn xi_at(&self, t: f64) -> f64 {
        let n = self.times.partition_point(|&g| g <= t);
        self.drift * t - self.log_factors[..n].iter().sum::<f64>()
    }

    /// Left limit `xi_{Gamma_i -}` just before the `i`-th jump.
    pub fn xi_before(&self, i: usize) -> f64 {
        self.drift * self.times[i] - self.log_factors[..i].iter().sum::<f64>()
    }
}

/// Jump arrivals and sizes of a COGARCH driver on `[0, horizon]`, exact.
pub fn simulate_xi_events<R: Rng + ?Sized>(
    params: &CogarchParams,
    horizon: f64,
    rng: &mut R,
) -> EventPath {
    let mut path = EventPath {
        horizon,
        drift: params.c,
        times: Vec::new(),
        sizes: Vec::new(),
        log_factors: Vec::new(),
    };
    if !(horizon > 0.0) || params.mu <= 0.0 {
        return path;
    }
    let clock = Exp::new(params.mu).expect("positive rate");
    let mut t = clock.sample(rng);
    while t <= horizon {
        let z = params.jump_law.sample(rng);
        path.times.push(t);
        path.sizes.push(z);
        path.log_factors.push(params.log_factor(z));
        t += clock.sample(rng);
    }
    path
}

/// `xi` sampled on a uniform grid `0, dt, 2dt, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub dt: f64,
    pub xi: Vec<f64>,
}

impl GridPath {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.xi.len()).map(move |i| i as f64 * self.dt)
    }
}

/// Exact Gaussian increments of a Brownian exponent on a uniform grid.
/// Intra-step suprema are not corrected.
pub fn simulate_xi_grid<R: Rng + ?Sized>(
    model: &LevyModel,
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<GridPath> {
    let b = model
        .brownian_xi()
        .ok_or_else(|| Error::InvalidModel("grid simulation needs a Brownian exponent".into()))?;
    if !(dt > 0.0 && dt <= horizon) {
        return Err(Error::InvalidConfig(format!(
            "need 0 < dt <= horizon, got dt = {dt}, horizon = {horizon}"
        )));
    }
    let steps = (horizon / dt).round() as usize;
    let sd = b.sigma * dt.sqrt();
    let mut xi = Vec::with_capacity(steps + 1);
    let mut x = 0.0;
    xi.push(x);
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        x += b.drift * dt + sd * z;
        xi.push(x);
    }
    Ok(GridPath { dt, xi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn nelson_unit() -> LevyModel {
        LevyModel::nelson(1.0, 1.0, 2f64.sqrt())
    }

    fn cogarch_log2() -> LevyModel {
        LevyModel::CogarchCpp(CogarchParams::with_log_factor(1.0, 1.0, 1.0, 2f64.ln()))
    }

    #[test]
    fn exponent_vanishes_at_zero() {
        for m in [
            nelson_unit(),
            cogarch_log2(),
            LevyModel::brownian(0.3, 1.2, 1.0),
        ] {
            assert_eq!(m.laplace_exponent(0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn nelson_exponent_root_at_two() {
        let m = nelson_unit();
        assert!(m.laplace_exponent(2.0).unwrap().abs() < 1e-15);
        assert!((m.find_alpha(None).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cogarch_log2_exponent_and_root() {
        let m = cogarch_log2();
        // -v c + mu (2^v - 1) at v = 1
        assert!(m.laplace_exponent(1.0).unwrap().abs() < 1e-14);
        let alpha = m.find_alpha(Some(3.0)).unwrap();
        assert!((alpha - 1.0).abs() < 1e-12, "{alpha}");
    }

    #[test]
    fn pure_drift_like_exponent_has_no_root() {
        let m = LevyModel::brownian(1.0, 1e-6, 1.0);
        assert!(matches!(
            m.find_alpha(None),
            Err(Error::NoPositiveRoot { .. })
        ));
        let ou = LevyModel::cogarch(1.0, 1.0, 0.0, 0.0, JumpLaw::TwoPoint { z: 1.0 });
        assert!(matches!(
            ou.find_alpha(None),
            Err(Error::NoPositiveRoot { .. })
        ));
    }

    #[test]
    fn non_negative_slope_is_rejected() {
        let m = LevyModel::brownian(-0.5, 1.0, 1.0);
        assert!(matches!(
            m.find_alpha(None),
            Err(Error::NotStationaryHeavyTail { .. })
        ));
    }

    #[test]
    fn gaussian_factor_moment_matches_series_values() {
        // E(1 + s X^2) = 1 + s and E(1 + s X^2)^2 = 1 + 2s + 3 s^2.
        let law = JumpLaw::Gaussian { sd: 1.0 };
        let s = 0.7;
        assert!((law.factor_moment(s, 1.0).unwrap() - (1.0 + s)).abs() < 1e-13);
        let two = 1.0 + 2.0 * s + 3.0 * s * s;
        assert!((law.factor_moment(s, 2.0).unwrap() - two).abs() < 1e-12);
        assert!((law.factor_moment(s, 0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_abs_moments() {
        let law = JumpLaw::Gaussian { sd: 2.0 };
        assert!((law.abs_moment(2.0) - 4.0).abs() < 1e-12);
        assert!((law.abs_moment(4.0) - 48.0).abs() < 1e-10);
    }

    #[test]
    fn conditions_for_nelson() {
        let r = nelson_unit().check_conditions(3.0);
        assert!(r.holds_a && r.holds_b && r.holds_c);
        let low = nelson_unit().check_conditions(1.5);
        assert!(low.holds_a);
        assert!(!low.holds_b && !low.holds_c);
    }

    #[test]
    fn conditions_for_gaussian_cogarch() {
        let m = LevyModel::cogarch(1.0, 1.0, 0.3, 1.0, JumpLaw::Gaussian { sd: 1.0 });
        let alpha = m.find_alpha(None).unwrap();
        assert!(alpha < 5.0);
        let r = m.check_conditions(5.0);
        assert!(r.holds_b && r.holds_c, "{r:?}");
    }

    #[test]
    fn negative_control_fails_every_condition() {
        let ou = LevyModel::cogarch(1.0, 1.0, 0.0, 1.0, JumpLaw::TwoPoint { z: 1.0 });
        let r = ou.check_conditions(2.0);
        assert!(r.alpha.is_none());
        assert!(!r.holds_a && !r.holds_b && !r.holds_c);
    }

    #[test]
    fn event_path_edge_cases() {
        let LevyModel::CogarchCpp(p) = cogarch_log2() else {
            unreachable!()
        };
        let empty = simulate_xi_events(&p, 0.0, &mut stream_rng(1, 0));
        assert!(empty.is_empty());
        let a = simulate_xi_events(&p, 50.0, &mut stream_rng(9, 2));
        let b = simulate_xi_events(&p, 50.0, &mut stream_rng(9, 2));
        assert_eq!(a, b);
        assert!(a.times.windows(2).all(|w| w[0] < w[1]));
        let t = a.times[0];
        assert!((a.xi_before(0) - t).abs() < 1e-12);
        assert!((a.xi_at(t) - (t - 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn tiny_sigma_grid_follows_drift() {
        let m = LevyModel::brownian(0.7, 1e-12, 1.0);
        let path = simulate_xi_grid(&m, 5.0, 0.01, &mut stream_rng(3, 0)).unwrap();
        for (t, x) in path.times().zip(&path.xi) {
            assert!((x - 0.7 * t).abs() < 1e-6);
        }
        assert!(simulate_xi_grid(&cogarch_log2(), 1.0, 0.1, &mut stream_rng(3, 0)).is_err());
    }

    #[test]
    fn model_ids_are_stable_and_distinct() {
        assert_eq!(nelson_unit().model_id(), nelson_unit().model_id());
        assert_ne!(nelson_unit().model_id(), cogarch_log2().model_id());
        assert!(nelson_unit().model_id().starts_with("nelson-"));
    }
}
