//! Stationary genOU volatility `V`, block suprema `H_k` and integrated
//! increments `I_k` on an `h`-grid.
//!
//! COGARCH paths are event driven and exact: between jumps `V` relaxes
//! towards `beta / c` in closed form and jumps multiply it by
//! `1 + lambda_g e^c z^2`. Diffusion paths step the recurrence on `subgrid`
//! sub-steps per block with exact multiplicative factors and a trapezoidal
//! `eta`-integral.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{CogarchParams, LevyModel};
use crate::rng::{stream_rng, SimRng};

/// How block suprema of diffusion-driven `V` are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupMode {
    /// Maximum over sub-grid points (biased low by `O(sqrt(dt))`).
    #[default]
    Grid,
    /// Adds the Brownian-bridge maximum of the multiplicative factor on
    /// every sub-step.
    Bridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    /// Sub-steps per block for diffusion models (ignored for COGARCH).
    pub subgrid: usize,
    pub sup_mode: SupMode,
    /// Override of the burn-in length used when no exact stationary draw exists.
    pub burn_in: Option<usize>,
    /// Draw the Nelson initial value from its inverse-gamma stationary law.
    pub exact_init: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            subgrid: 64,
            sup_mode: SupMode::Grid,
            burn_in: None,
            exact_init: true,
        }
    }
}

/// One draw of `(A, B)` with `V_{(k+1)h} = A V_{kh} + B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceCoeffs {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockStep {
    pub v_end: f64,
    pub sup: f64,
    pub increment: f64,
    /// `-(xi_end - xi_start)`, so `A = exp(log_a)`.
    pub log_a: f64,
}

/// Advances `V` over consecutive blocks, carrying the compound-Poisson clock.
pub struct Stepper<'m> {
    model: &'m LevyModel,
    opts: SimOptions,
    clock: Option<Exp<f64>>,
    residual: f64,
}

impl<'m> Stepper<'m> {
    pub fn new<R: Rng + ?Sized>(model: &'m LevyModel, opts: SimOptions, rng: &mut R) -> Self {
        let clock = match model {
            LevyModel::CogarchCpp(p) if p.mu > 0.0 => Some(Exp::new(p.mu).expect("positive rate")),
            _ => None,
        };
        let residual = clock.map_or(f64::INFINITY, |c| c.sample(rng));
        Stepper {
            model,
            opts,
            clock,
            residual,
        }
    }

    /// Advance from `v` over a block of length `len`, using `steps` sub-steps
    /// for diffusion models.
    pub fn advance<R: Rng + ?Sized>(
        &mut self,
        v: f64,
        len: f64,
        steps: usize,
        need_increment: bool,
        rng: &mut R,
    ) -> BlockStep {
        match self.model {
            LevyModel::CogarchCpp(p) => {
                let p = *p;
                self.advance_events(&p, v, len, rng)
            }
            _ => self.advance_diffusion(v, len, steps.max(1), need_increment, rng),
        }
    }

    fn advance_events<R: Rng + ?Sized>(
        &mut self,
        p: &CogarchParams,
        mut v: f64,
        len: f64,
        rng: &mut R,
    ) -> BlockStep {
        let level = if p.beta == 0.0 { 0.0 } else { p.beta / p.c };
        let decay = |v: f64, d: f64| v - (level - v) * (-p.c * d).exp_m1();
        let mut sup = v;
        let mut increment = 0.0;
        let mut log_a = 0.0;
        let mut remaining = len;
        loop {
            if self.residual > remaining {
                v = decay(v, remaining);
                log_a -= p.c * remaining;
                self.residual -= remaining;
                break;
            }
            v = decay(v, self.residual);
            log_a -= p.c * self.residual;
            remaining -= self.residual;
            sup = sup.max(v);
            let z = p.jump_law.sample(rng);
            increment += v.sqrt() * z;
            v *= p.jump_factor(z);
            log_a += p.log_factor(z);
            sup = sup.max(v);
            self.residual = self.clock.expect("jumps imply a clock").sample(rng);
        }
        BlockStep {
            v_end: v,
            sup: sup.max(v),
            increment,
            log_a,
        }
    }

    fn advance_diffusion<R: Rng + ?Sized>(
        &mut self,
        mut v: f64,
        len: f64,
        steps: usize,
        need_increment: bool,
        rng: &mut R,
    ) -> BlockStep {
        let b = self.model.brownian_xi().expect("diffusion family");
        let eta = self.model.eta_rate();
        let dt = len / steps as f64;
        let sd = b.sigma * dt.sqrt();
        let root_dt = dt.sqrt();
        let bridge_scale = 2.0 * b.sigma * b.sigma * dt;
        let mut sup = v;
        let mut increment = 0.0;
        let mut log_a = 0.0;
        for _ in 0..steps {
            let z: f64 = rng.sample(StandardNormal);
            let dxi = b.drift * dt + sd * z;
            let factor = (-dxi).exp();
            if need_increment {
                let w: f64 = rng.sample(StandardNormal);
                increment += v.sqrt() * root_dt * w;
            }
            let next = factor * v + eta * dt * 0.5 * (1.0 + factor);
            if self.opts.sup_mode == SupMode::Bridge {
                let u: f64 = 1.0 - rng.random::<f64>();
                let y = -dxi;
                let peak = 0.5 * (y + (y * y - bridge_scale * u.ln()).sqrt());
                sup = sup.max(v * peak.exp());
            }
            v = next;
            sup = sup.max(v);
            log_a -= dxi;
        }
        BlockStep {
            v_end: v,
            sup,
            increment,
            log_a,
        }
    }
}

fn check_step(h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "h must be finite and > 0, got {h}"
        )));
    }
    Ok(())
}

/// One i.i.d. draw of the recurrence coefficients over a window of length `h`.
pub fn sample_recurrence_coeffs<R: Rng + ?Sized>(
    model: &LevyModel,
    h: f64,
    subgrid: usize,
    rng: &mut R,
) -> Result<RecurrenceCoeffs> {
    model.validate()?;
    check_step(h)?;
    let opts = SimOptions {
        subgrid,
        ..SimOptions::default()
    };
    let mut stepper = Stepper::new(model, opts, rng);
    let step = stepper.advance(0.0, h, subgrid, false, rng);
    Ok(RecurrenceCoeffs {
        a: step.log_a.exp(),
        b: step.v_end,
    })
}

/// Burn-in length `ceil(30 / (-Psi(alpha/2) h))`, capped at `1e5`.
pub fn default_burn_in(model: &LevyModel, h: f64) -> usize {
    const CAP: usize = 100_000;
    let rate = match model.find_alpha(None) {
        Ok(alpha) => -model.laplace_exponent(0.5 * alpha).unwrap_or(0.0),
        Err(_) => -model.laplace_exponent(1.0).unwrap_or(0.0),
    };
    if !(rate > 0.0) {
        return CAP;
    }
    ((30.0 / (rate * h)).ceil() as usize).clamp(1, CAP)
}

/// Inverse-gamma stationary law of the Nelson volatility:
/// `(shape, scale) = (1 + 2 lambda / sigma^2, 2 lambda a / sigma^2)`.
pub fn nelson_stationary_law(lambda: f64, a: f64, sigma: f64) -> (f64, f64) {
    let s2 = sigma * sigma;
    (1.0 + 2.0 * lambda / s2, 2.0 * lambda * a / s2)
}

/// Draw a stationary initial value, returning it with the burn-in used.
pub fn stationary_init<R: Rng + ?Sized>(
    model: &LevyModel,
    h: f64,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<(f64, usize)> {
    model.validate()?;
    check_step(h)?;
    if let (LevyModel::Nelson(p), true) = (model, opts.exact_init) {
        let (shape, scale) = nelson_stationary_law(p.lambda, p.a, p.sigma);
        if scale <= 0.0 {
            return Err(Error::InvalidConfig(
                "Nelson model with a = 0 has no positive stationary law".into(),
            ));
        }
        let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
        return Ok((scale / g, 0));
    }
    let start = match *model {
        LevyModel::CogarchCpp(p) if p.beta > 0.0 => p.beta / p.c,
        LevyModel::Nelson(p) if p.a > 0.0 => p.a,
        _ => 1.0,
    };
    let burn = opts.burn_in.unwrap_or_else(|| default_burn_in(model, h));
    let mut stepper = Stepper::new(model, *opts, rng);
    let mut v = start;
    for _ in 0..burn {
        v = stepper.advance(v, h, opts.subgrid, false, rng).v_end;
    }
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "burn-in ended at non-positive or non-finite value {v}"
        )));
    }
    Ok((v, burn))
}

/// Sampled stationary series on an `h`-grid with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSeries {
    pub h: f64,
    /// `V_0, V_h, ..., V_{nh}` (one more entry than the block sequences).
    pub v: Vec<f64>,
    /// Block suprema `H_1..H_n`.
    pub block_max: Vec<f64>,
    /// Increments `I_1..I_n`.
    pub increments: Vec<f64>,
    pub model_id: String,
    pub seed: u64,
    pub burn_in: usize,
    pub subgrid: usize,
    pub sup_mode: SupMode,
    /// Integrand convention of the stochastic integral.
    pub integrand: &'static str,
}

impl SkeletonSeries {
    pub fn len(&self) -> usize {
        self.block_max.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_max.is_empty()
    }

    /// `V_h, ..., V_{nh}`, aligned with the block sequences.
    pub fn v_blocks(&self) -> &[f64] {
        &self.v[1..]
    }
}

pub(crate) fn integrand_convention(model: &LevyModel) -> &'static str {
    match model {
        LevyModel::CogarchCpp(_) => "left-limit",
        _ => "left-point",
    }
}

/// Blocks `1..=n` from a given starting value.
pub fn simulate_blocks<R: Rng + ?Sized>(
    model: &LevyModel,
    v0: f64,
    h: f64,
    n: usize,
    opts: &SimOptions,
    need_increment: bool,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut v = Vec::with_capacity(n + 1);
    let mut sup = Vec::with_capacity(n);
    let mut inc = Vec::with_capacity(n);
    v.push(v0);
    let mut stepper = Stepper::new(model, *opts, rng);
    let mut current = v0;
    for _ in 0..n {
        let step = stepper.advance(current, h, opts.subgrid, need_increment, rng);
        current = step.v_end;
        v.push(current);
        sup.push(step.sup);
        inc.push(step.increment);
    }
    (v, sup, inc)
}

/// Stationary skeleton of length `n` on the `h`-grid.
pub fn simulate_skeleton(
    model: &LevyModel,
    h: f64,
    n: usize,
    opts: &SimOptions,
    seed: u64,
) -> Result<SkeletonSeries> {
    model.validate()?;
    check_step(h)?;
    if n == 0 {
        return Err(Error::InvalidConfig("series length n must be >= 1".into()));
    }
    if opts.subgrid == 0 {
        return Err(Error::InvalidConfig("subgrid must be >= 1".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let (v0, burn_in) = stationary_init(model, h, opts, &mut rng)?;
    let (v, block_max, increments) = simulate_blocks(model, v0, h, n, opts, true, &mut rng);
    Ok(SkeletonSeries {
        h,
        v,
        block_max,
        increments,
        model_id: model.model_id(),
        seed,
        burn_in,
        subgrid: opts.subgrid,
        sup_mode: opts.sup_mode,
        integrand: integrand_convention(model),
    })
}

/// `I*_t` at the increasing times `t_grid` (all `> 0`), started stationary.
/// For diffusion models `opts.subgrid` is read as sub-steps per unit time.
pub fn simulate_integrated_with<R: Rng + ?Sized>(
    model: &LevyModel,
    t_grid: &[f64],
    opts: &SimOptions,
    rng: &mut R,
) -> Result<Vec<f64>> {
    model.validate()?;
    if t_grid.is_empty() {
        return Ok(Vec::new());
    }
    if !(t_grid[0] > 0.0) || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidConfig(
            "time grid must be strictly increasing and start after 0".into(),
        ));
    }
    let (mut v, _) = stationary_init(model, 1.0, opts, rng)?;
    let mut stepper = Stepper::new(model, *opts, rng);
    let mut total = 0.0;
    let mut last = 0.0;
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let len = t - last;
        let steps = ((len * opts.subgrid as f64).ceil() as usize).max(1);
        let step = stepper.advance(v, len, steps, true, rng);
        v = step.v_end;
        total += step.increment;
        out.push(total);
        last = t;
    }
    Ok(out)
}

pub fn simulate_integrated(
    model: &LevyModel,
    t_grid: &[f64],
    opts: &SimOptions,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng: SimRng = stream_rng(seed, 0);
    simulate_integrated_with(model, t_grid, opts, &mut rng)
}

/// Write the series as `k,V,H,I` CSV with a `#`-prefixed provenance header.
/// Row `k = 0` carries `V_0` only.
pub fn write_series_csv<W: Write>(series: &SkeletonSeries, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# model={} h={} seed={} burn_in={} subgrid={} sup_mode={:?} integrand={}",
        series.model_id,
        series.h,
        series.seed,
        series.burn_in,
        series.subgrid,
        series.sup_mode,
        series.integrand
    )?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "V", "H", "I"])?;
    w.write_record(["0", &series.v[0].to_string(), "", ""])?;
    for k in 0..series.len() {
        w.write_record([
            (k + 1).to_string(),
            series.v[k + 1].to_string(),
            series.block_max[k].to_string(),
            series.increments[k].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A series read back from CSV: either the full `k,V,H,I` layout or a
/// single numeric column (stored in `v`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeriesData {
    pub v: Vec<f64>,
    pub block_max: Vec<f64>,
    pub increments: Vec<f64>,
}

pub fn read_series_csv<R: Read>(input: R) -> Result<SeriesData> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut data = SeriesData::default();
    let mut layout: Option<bool> = None;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parse = |f: &str| -> Result<Option<f64>> {
            if f.is_empty() {
                return Ok(None);
            }
            f.parse::<f64>().map(Some).map_err(|_| {
                Error::InvalidConfig(format!("line {}: cannot parse `{f}` as a number", line + 1))
            })
        };
        let full = *layout.get_or_insert(record.len() >= 4);
        if line == 0 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            // header row
            continue;
        }
        if full {
            if let Some(v) = parse(record.get(1).unwrap_or(""))? {
                data.v.push(v);
            }
            if let Some(h) = parse(record.get(2).unwrap_or(""))? {
                data.block_max.push(h);
            }
            if let Some(i) = parse(record.get(3).unwrap_or(""))? {
                data.increments.push(i);
            }
        } else if let Some(v) = parse(record.get(0).unwrap_or(""))? {
            data.v.push(v);
        }
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::JumpLaw;

    fn cogarch_log2() -> LevyModel {
        LevyModel::CogarchCpp(CogarchParams::with_log_factor(1.0, 1.0, 1.0, 2f64.ln()))
    }

    #[test]
    fn deterministic_exponent_coefficients_are_closed_form() {
        let (c, beta, h) = (0.8, 1.5, 1.7);
        let m = LevyModel::cogarch(beta, c, 0.0, 0.0, JumpLaw::TwoPoint { z: 1.0 });
        let coeffs = sample_recurrence_coeffs(&m, h, 1, &mut stream_rng(1, 0)).unwrap();
        assert!((coeffs.a - (-c * h).exp()).abs() < 1e-15);
        let b = beta * (1.0 - (-c * h).exp()) / c;
        assert!((coeffs.b - b).abs() < 1e-14);
    }

    #[test]
    fn empty_window_gives_identity_map() {
        for m in [cogarch_log2(), LevyModel::nelson(1.0, 1.0, 1.0)] {
            let coeffs = sample_recurrence_coeffs(&m, 1e-12, 4, &mut stream_rng(5, 0)).unwrap();
            assert!((coeffs.a - 1.0).abs() < 1e-5, "{coeffs:?}");
            assert!(coeffs.b.abs() < 1e-10);
        }
    }

    #[test]
    fn block_step_is_affine_in_the_start_value() {
        for m in [cogarch_log2(), LevyModel::nelson(1.0, 1.0, 1.3)] {
            let opts = SimOptions {
                subgrid: 16,
                ..SimOptions::default()
            };
            let run = |v: f64| {
                let mut rng = stream_rng(11, 0);
                let mut s = Stepper::new(&m, opts, &mut rng);
                s.advance(v, 1.0, 16, false, &mut rng)
            };
            let from_zero = run(0.0);
            let from_v = run(2.5);
            let a = from_zero.log_a.exp();
            let expect = a * 2.5 + from_zero.v_end;
            assert!((from_v.v_end - expect).abs() < 1e-12 * expect.max(1.0));
        }
    }

    #[test]
    fn zero_eta_gives_pure_products() {
        let m = LevyModel::nelson(1.0, 0.0, 1.0);
        let opts = SimOptions {
            subgrid: 8,
            ..SimOptions::default()
        };
        let mut rng = stream_rng(2, 0);
        let mut s = Stepper::new(&m, opts, &mut rng);
        let mut v = 3.0;
        let mut product = 3.0;
        for _ in 0..50 {
            let step = s.advance(v, 0.5, 8, false, &mut rng);
            product *= step.log_a.exp();
            v = step.v_end;
            assert!((v - product).abs() <= 1e-12 * product);
        }
    }

    #[test]
    fn cogarch_quiet_block_follows_the_ode() {
        let m = LevyModel::CogarchCpp(CogarchParams {
            mu: 1e-9,
            ..CogarchParams::with_log_factor(2.0, 0.7, 1.0, 0.5)
        });
        let mut rng = stream_rng(4, 0);
        let mut s = Stepper::new(&m, SimOptions::default(), &mut rng);
        let step = s.advance(5.0, 1.3, 1, true, &mut rng);
        let level = 2.0 / 0.7;
        let expect = (-0.7f64 * 1.3).exp() * 5.0 + level * (1.0 - (-0.7f64 * 1.3).exp());
        assert!((step.v_end - expect).abs() < 1e-12);
        assert_eq!(step.increment, 0.0);
        assert_eq!(step.sup, 5.0);
    }

    #[test]
    fn cogarch_jump_multiplies_by_the_factor() {
        let p = CogarchParams::with_log_factor(1.0, 1.0, 3.0, 0.9);
        let m = LevyModel::CogarchCpp(p);
        let mut rng = stream_rng(8, 0);
        let mut s = Stepper::new(&m, SimOptions::default(), &mut rng);
        // Step right up to the first jump, then across it.
        let first = s.residual;
        let before = s
            .advance(1.0, first * (1.0 - 1e-12), 1, false, &mut rng)
            .v_end;
        let after = s.advance(before, first * 2e-12, 1, false, &mut rng).v_end;
        assert!((after / before - p.jump_factor(1.0)).abs() < 1e-9);
        assert!((p.jump_factor(1.0) - 0.9f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn skeleton_shapes_and_positivity() {
        for (m, sup_mode) in [
            (cogarch_log2(), SupMode::Grid),
            (LevyModel::nelson(1.0, 1.0, 1.2), SupMode::Grid),
            (LevyModel::nelson(1.0, 1.0, 1.2), SupMode::Bridge),
            (LevyModel::brownian(0.5, 1.0, 1.0), SupMode::Grid),
        ] {
            let opts = SimOptions {
                subgrid: 8,
                sup_mode,
                ..SimOptions::default()
            };
            let s = simulate_skeleton(&m, 0.5, 500, &opts, 3).unwrap();
            assert_eq!(s.v.len(), 501);
            assert_eq!(s.block_max.len(), 500);
            assert_eq!(s.increments.len(), 500);
            assert!(s.v.iter().all(|&v| v > 0.0));
            for k in 0..500 {
                assert!(s.block_max[k] >= s.v[k].max(s.v[k + 1]));
            }
        }
    }

    #[test]
    fn invalid_skeleton_requests() {
        let m = cogarch_log2();
        assert!(simulate_skeleton(&m, 1.0, 0, &SimOptions::default(), 1).is_err());
        assert!(simulate_skeleton(&m, -1.0, 10, &SimOptions::default(), 1).is_err());
    }

    #[test]
    fn skeleton_is_seed_deterministic() {
        let m = LevyModel::nelson(1.0, 1.0, 1.0);
        let a = simulate_skeleton(&m, 1.0, 100, &SimOptions::default(), 17).unwrap();
        let b = simulate_skeleton(&m, 1.0, 100, &SimOptions::default(), 17).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_rate_driver_integrates_to_zero() {
        let m = LevyModel::cogarch(1.0, 1.0, 0.5, 0.0, JumpLaw::TwoPoint { z: 1.0 });
        let opts = SimOptions {
            burn_in: Some(10),
            ..SimOptions::default()
        };
        let path = simulate_integrated(&m, &[1.0, 2.0, 5.0], &opts, 4).unwrap();
        assert_eq!(path, vec![0.0, 0.0, 0.0]);
        assert!(simulate_integrated(&m, &[0.0, 1.0], &opts, 4).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = cogarch_log2();
        let s = simulate_skeleton(&m, 1.0, 20, &SimOptions::default(), 9).unwrap();
        let mut buf = Vec::new();
        write_series_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# model=cogarch_cpp-"));
        assert!(text.contains("seed=9"));
        let back = read_series_csv(buf.as_slice()).unwrap();
        assert_eq!(back.v, s.v);
        assert_eq!(back.block_max, s.block_max);
        assert_eq!(back.increments, s.increments);

        let single = read_series_csv("x\n1.5\n2\n\n3e0\n".as_bytes()).unwrap();
        assert_eq!(single.v, vec![1.5, 2.0, 3.0]);
    }
}
