//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line before
//! asserting, so `cargo test --test acceptance -- --nocapture` doubles as a
//! report. Tolerances are fixed here and never loosened.

use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use genou::experiment::{self, ExperimentConfig};
use genou::levy::{CogarchParams, LevyModel};
use genou::rng::{stream_rng, with_workers};
use genou::sim::{simulate_skeleton, SimOptions, SkeletonSeries, SupMode};
use genou::stats::summary::quantile;
use genou::stats::{
    expected_rate_slope, extremal_index_blocks, hill_estimator, integrated_limit_check,
    partial_maxima_check, rate_diagnostic, sample_acv, sample_acv_with, tail_ratio,
    IntegratedLimitSettings, PartialMaximaSettings, RateSettings, RateStatistic, SeriesSource,
    TailTransform,
};
use genou::theory::{
    extremal_index_v, first_jump_discount, frechet_constant, mc_sup_exponent, tail_constant_i,
    verify_first_jump_identity, verify_window_scaling, McSettings,
};
use genou::Error;

fn verdict(id: u32, name: &str, pass: bool, detail: String) -> bool {
    println!(
        "criterion {id:>2} {} {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn mc(n_paths: usize, seed: u64) -> McSettings {
    McSettings {
        n_paths,
        seed,
        ..McSettings::default()
    }
}

/// Nelson model with `alpha = 1 + 2 lambda / sigma^2 = 2` and `C = 1/2`.
fn nelson_alpha2() -> LevyModel {
    LevyModel::nelson(1.0, 1.0, 2f64.sqrt())
}

fn cogarch_alpha1() -> CogarchParams {
    CogarchParams::with_log_factor(1.0, 1.0, 1.0, 2f64.ln())
}

/// Shared by the tail-equivalence and extremal-index criteria.
fn nelson_skeleton() -> &'static SkeletonSeries {
    static SERIES: OnceLock<SkeletonSeries> = OnceLock::new();
    SERIES.get_or_init(|| {
        let opts = SimOptions {
            subgrid: 32,
            sup_mode: SupMode::Bridge,
            ..SimOptions::default()
        };
        simulate_skeleton(&nelson_alpha2(), 1.0, 1_000_000, &opts, 5).unwrap()
    })
}

#[test]
fn c01_nelson_root_closed_form() {
    let mut worst = 0.0f64;
    for lambda in [0.1, 0.5, 1.0, 2.5, 7.0] {
        for sigma in [0.3, 0.8, 1.0, 1.7, 3.0] {
            let alpha = LevyModel::nelson(lambda, 1.0, sigma)
                .find_alpha(None)
                .unwrap();
            worst = worst.max((alpha - (1.0 + 2.0 * lambda / (sigma * sigma))).abs());
        }
    }
    assert!(verdict(
        1,
        "Nelson root on 5x5 grid",
        worst <= 1e-10,
        format!("max error {worst:.2e}")
    ));
}

#[test]
fn c02_cogarch_log2_root() {
    // Independent oracle: Psi(s) = -s + 2^s - 1, root located by bisection.
    let oracle = |s: f64| -s + 2f64.powf(s) - 1.0;
    let (mut lo, mut hi) = (0.5, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if oracle(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let model = LevyModel::CogarchCpp(cogarch_alpha1());
    let alpha = model.find_alpha(None).unwrap();
    let psi_err = [0.25, 0.5, 1.5, 3.0]
        .iter()
        .map(|&s| (model.laplace_exponent(s).unwrap() - oracle(s)).abs())
        .fold(0.0, f64::max);
    let pass = (alpha - 1.0).abs() <= 1e-10 && (root - 1.0).abs() <= 1e-10 && psi_err <= 1e-10;
    assert!(verdict(
        2,
        "COGARCH log 2 root",
        pass,
        format!("alpha {alpha:.12}, oracle root {root:.12}, exponent error {psi_err:.1e}")
    ));
}

#[test]
fn c03_window_scaling_identity() {
    let model = LevyModel::brownian(1.0, 1.0, 1.0);
    let alpha = model.find_alpha(None).unwrap();
    let mut pass = (alpha - 2.0).abs() < 1e-10;
    let mut detail = format!("alpha {alpha}");
    for (i, h) in [0.5, 2.0, 4.0].into_iter().enumerate() {
        let check = verify_window_scaling(&model, alpha, h, &mc(100_000, 11 + i as u64)).unwrap();
        pass &= check.z_score.abs() <= 3.0;
        detail += &format!(
            "; h={h}: {:.4} vs {:.4} z={:.2}",
            check.lhs.value, check.rhs.value, check.z_score
        );
    }
    // Negative control: pure drift exponent, so E exp(-alpha xi_1) != 1.
    let drift = LevyModel::CogarchCpp(CogarchParams::with_log_factor(1.0, 1.0, 0.0, 2f64.ln()));
    let control = verify_window_scaling(&drift, 1.0, 2.0, &mc(1000, 1));
    let rejected = matches!(control, Err(Error::PreconditionViolated(_)));
    pass &= rejected;
    detail += &format!("; drift control rejected: {rejected}");
    assert!(verdict(3, "window-scaling identity", pass, detail));
}

#[test]
fn c04_first_jump_identity() {
    let params = cogarch_alpha1();
    let check = verify_first_jump_identity(&params, 1.0, &mc(100_000, 1)).unwrap();
    // E exp(-alpha c Gamma_1) by Simpson quadrature of mu e^{-(mu + alpha c) t}.
    let (mu, alpha, c) = (params.mu, 1.0, params.c);
    let steps = 400_000;
    let upper = 60.0;
    let dt = upper / steps as f64;
    let f = |t: f64| mu * (-(mu + alpha * c) * t).exp();
    let inner: f64 = (1..steps)
        .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * dt))
        .sum();
    let quad = dt / 3.0 * (f(0.0) + inner + f(upper));
    let analytic = first_jump_discount(mu, alpha, c);
    let quad_err = (quad - analytic).abs();
    let pass = check.z_score.abs() <= 3.0 && quad_err <= 1e-9 && analytic == 0.5;
    assert!(verdict(
        4,
        "first-jump identity",
        pass,
        format!(
            "{:.4} vs {:.4} z={:.2}; discount {analytic} vs quadrature error {quad_err:.1e}",
            check.lhs.value, check.rhs.value, check.z_score
        )
    ));
}

#[test]
fn c05_block_sup_tail_equivalence() {
    let s = nelson_skeleton();
    let sup = mc_sup_exponent(&nelson_alpha2(), 2.0, 1.0, &mc(100_000, 2)).unwrap();
    let ratio = tail_ratio(&s.block_max, s.v_blocks(), 0.995, TailTransform::Identity).unwrap();
    let rel = ratio / sup.value - 1.0;
    assert!(verdict(
        5,
        "block-sup tail equivalence",
        rel.abs() <= 0.25,
        format!(
            "ratio {ratio:.3} vs E sup {:.3} ({:+.1}%)",
            sup.value,
            100.0 * rel
        )
    ));
}

#[test]
fn c06_increment_tail_equivalence() {
    let params = cogarch_alpha1();
    let model = LevyModel::CogarchCpp(params);
    let s = simulate_skeleton(&model, 1.0, 1_000_000, &SimOptions::default(), 5).unwrap();
    let constant = tail_constant_i(&model, 1.0, 1.0, &mc(200_000, 2)).unwrap();
    let ratio = tail_ratio(&s.increments, s.v_blocks(), 0.995, TailTransform::Square).unwrap();
    let rel = ratio / constant.value - 1.0;
    assert!(verdict(
        6,
        "increment tail equivalence",
        rel.abs() <= 0.25,
        format!(
            "ratio {ratio:.3} vs constant {:.3} ({:+.1}%)",
            constant.value,
            100.0 * rel
        )
    ));
}

#[test]
fn c07_extremal_index_cross_check() {
    let s = nelson_skeleton();
    let theory = extremal_index_v(&nelson_alpha2(), 2.0, 1.0, &mc(100_000, 3)).unwrap();
    let threshold = quantile(&s.block_max, 0.998);
    let est = extremal_index_blocks(&s.block_max, threshold, 20).unwrap();
    let se = (est.se.powi(2) + theory.std_error.powi(2)).sqrt();
    let z = (est.theta_hat - theory.value) / se;
    let inside = |x: f64| x > 0.0 && x < 1.0;
    let pass = z.abs() <= 3.0 && inside(est.theta_hat) && inside(theory.value);
    assert!(verdict(
        7,
        "extremal index of block sups",
        pass,
        format!(
            "blocks {:.4} (se {:.4}) vs Monte Carlo {:.4} (se {:.4}), z={z:.2}",
            est.theta_hat, est.se, theory.value, theory.std_error
        )
    ));
}

#[test]
fn c08_partial_maxima_frechet_limit() {
    let model = nelson_alpha2();
    let kappa = frechet_constant(&model, 2.0, &mc(100_000, 9)).unwrap();
    let points = partial_maxima_check(
        &model,
        2.0,
        0.5,
        kappa.value,
        &PartialMaximaSettings::default(),
    )
    .unwrap();
    let last = points.last().unwrap();
    let trail: Vec<String> = points
        .iter()
        .map(|p| format!("n={} ks={:.4}", p.n, p.ks))
        .collect();
    assert!(verdict(
        8,
        "Frechet limit of running maxima",
        last.ks <= 0.05,
        format!("kappa {:.4}; {}", kappa.value, trail.join(", "))
    ));
}

#[test]
fn c09_acf_rate_regimes() {
    let base = RateSettings {
        seed: 1,
        ..RateSettings::default()
    };
    let cases = [
        (
            "alpha=3 acv_V",
            Some(LevyModel::nelson(1.0, 1.0, 1.0)),
            RateStatistic::AcvV,
            -1.0 / 3.0,
            0.12,
            400,
        ),
        (
            "alpha=6 acv_V",
            Some(LevyModel::nelson(2.5, 1.0, 1.0)),
            RateStatistic::AcvV,
            -0.5,
            0.10,
            400,
        ),
        (
            "alpha=1.5 acf_V",
            Some(LevyModel::nelson(0.25, 1.0, 1.0)),
            RateStatistic::AcfV,
            0.0,
            0.12,
            400,
        ),
        ("iid Gaussian", None, RateStatistic::AcvV, -0.5, 0.05, 1000),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, model, statistic, target, tol, reps) in cases {
        let settings = RateSettings {
            statistic,
            n_reps: reps,
            ..base.clone()
        };
        let d = match &model {
            Some(m) => {
                let alpha = m.find_alpha(None).unwrap();
                let expected = expected_rate_slope(statistic, alpha).unwrap();
                assert!(
                    (expected - target).abs() < 1e-9,
                    "{name}: regime slope {expected}"
                );
                rate_diagnostic(SeriesSource::Model(m), &settings).unwrap()
            }
            None => rate_diagnostic(SeriesSource::IidGaussian, &settings).unwrap(),
        };
        let ok = (d.slope - target).abs() <= tol;
        pass &= ok;
        detail.push(format!("{name}: {:.3} vs {target:.3}+-{tol}", d.slope));
    }
    assert!(verdict(
        9,
        "sample ACF rate regimes",
        pass,
        detail.join("; ")
    ));
}

#[test]
fn c10_integrated_limits() {
    let nelson = integrated_limit_check(
        &nelson_alpha2(),
        2.0,
        &IntegratedLimitSettings {
            seed: 1,
            ..IntegratedLimitSettings::default()
        },
    )
    .unwrap();
    let heavy = LevyModel::CogarchCpp(CogarchParams::with_log_factor(
        1.0,
        1.0,
        1.0,
        1.4f64.ln() / 0.4,
    ));
    let alpha = heavy.find_alpha(None).unwrap();
    let stable = integrated_limit_check(
        &heavy,
        alpha,
        &IntegratedLimitSettings {
            seed: 1,
            slope_tol: 0.15,
            ..IntegratedLimitSettings::default()
        },
    )
    .unwrap();
    let slope = stable.slope.unwrap();
    let pass = nelson.shape_pass && (slope - 1.0 / (2.0 * alpha)).abs() <= 0.15;
    assert!(verdict(
        10,
        "integrated process limits",
        pass,
        format!(
            "alpha=2: skew {:.3}, excess kurtosis {:.3}, KS {:.4}; alpha={alpha:.3}: slope {slope:.3} vs {:.3}",
            nelson.skewness.unwrap(),
            nelson.excess_kurtosis.unwrap(),
            nelson.ks_normal.unwrap(),
            1.0 / (2.0 * alpha)
        )
    ));
}

#[test]
fn c11_estimator_oracles() {
    let mut rng = stream_rng(77, 0);
    // Sample autocovariance against a plain double loop.
    let x: Vec<f64> = (0..50).map(|_| StandardNormal.sample(&mut rng)).collect();
    let est = sample_acv(&x, 10).unwrap();
    let centred_est = sample_acv_with(&x, 10, true).unwrap();
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let xc: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let mut acv_exact = true;
    for h in 0..=10 {
        let (mut plain, mut centred) = (0.0, 0.0);
        for t in 0..n - h {
            plain += x[t] * x[t + h];
            centred += xc[t] * xc[t + h];
        }
        acv_exact &= est.gamma_hat[h] == plain / n as f64;
        acv_exact &= centred_est.gamma_hat[h] == centred / n as f64;
    }
    // Hill estimates are unchanged by a positive rescaling.
    let pareto: Vec<f64> = (0..5000).map(|_| rng.random::<f64>().powf(-0.5)).collect();
    let scaled: Vec<f64> = pareto.iter().map(|v| 8.0 * v).collect();
    let h1 = hill_estimator(&pareto, 200).unwrap().alpha_hat;
    let h2 = hill_estimator(&scaled, 200).unwrap().alpha_hat;
    // Moving maximum of i.i.d. Pareto has extremal index 1/2.
    let z: Vec<f64> = (0..400_001)
        .map(|_| rng.random::<f64>().powf(-1.0))
        .collect();
    let mm: Vec<f64> = z.windows(2).map(|w| w[0].max(w[1])).collect();
    let theta = extremal_index_blocks(&mm, quantile(&mm, 0.995), 28).unwrap();
    let z_theta = (theta.theta_hat - 0.5) / theta.se;
    let pass = acv_exact && h1 == h2 && z_theta.abs() <= 3.0;
    assert!(verdict(
        11,
        "estimator oracles",
        pass,
        format!(
            "acv exact {acv_exact}; Hill {h1:.6} vs {h2:.6}; moving max theta {:.4} (se {:.4})",
            theta.theta_hat, theta.se
        )
    ));
}

const REPRO_CONFIG: &str = r#"
tasks = ["simulate", "constants", "verify_identities", "tails", "extremes", "acf_rates"]
seed = 42
h = 1.0
sizes = [200, 1000, 4000, 20000]
reps = 200

[model]
family = "nelson"
lambda = 1.0
a = 1.0
sigma = 1.4142135623730951

[monte_carlo]
n_paths = 2000

[estimation]
series_len = 200000
tail_quantile = 0.99
"#;

fn run_in(config: &ExperimentConfig, dir: &Path, workers: usize) -> Vec<(String, Vec<u8>)> {
    with_workers(workers, || experiment::run_experiment_in(config, dir)).unwrap();
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .filter(|(name, _)| name.ends_with(".csv"))
        .collect();
    files.sort();
    files
}

#[test]
fn c12_worker_count_reproducibility() {
    let config = experiment::parse_config(REPRO_CONFIG).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let one = run_in(&config, a.path(), 1);
    let four = run_in(&config, b.path(), 4);
    let names: Vec<&str> = one.iter().map(|(n, _)| n.as_str()).collect();
    let pass = !one.is_empty() && one == four;
    assert!(verdict(
        12,
        "worker-count reproducibility",
        pass,
        format!("{} CSV files compared: {}", one.len(), names.join(", "))
    ));
}
