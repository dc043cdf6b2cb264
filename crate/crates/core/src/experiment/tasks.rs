//! Task implementations and the experiment driver.

use std::fs;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Exp};

use crate::error::{Error, Result};
use crate::experiment::config::{ExperimentConfig, Task};
use crate::experiment::report::{write_atomic, Artifact, ExperimentReport, ReportRow};
use crate::levy::LevyModel;
use crate::rng::{derive_seed, par_map, stream_rng};
use crate::sim::{self, SkeletonSeries};
use crate::stats::summary::{mean_se, quantile};
use crate::stats::{self, RateStatistic, SeriesSource, TailTransform};
use crate::theory::{self, EmpiricalTailSettings};

const A_ROOT: &str = "Laplace exponent root";
const A_HILL: &str = "Pareto-like stationary tail";
const A_SUP: &str = "tail of block suprema";
const A_INC: &str = "tail of integrated increments";
const A_KAPPA: &str = "Frechet limit of running maxima";
const A_THETA: &str = "extremal index function";
const A_SCALING: &str = "sup-gap window scaling identity";
const A_FIRST_JUMP: &str = "first-jump representation of the Frechet constant";
const A_RATES: &str = "sample autocovariance limit regimes";
const A_INTEGRATED: &str = "limit of the integrated process";
const PLUMBING: &str = "plumbing";

pub const REPORT_FILE: &str = "report.csv";
pub const CONFIG_ECHO_FILE: &str = "config.toml";

struct Ctx<'a> {
    config: &'a ExperimentConfig,
    out: &'a Path,
    rows: Vec<ReportRow>,
    artifacts: Vec<Artifact>,
}

impl Ctx<'_> {
    fn model(&self) -> &LevyModel {
        &self.config.model
    }

    fn seed(&self, task: Task) -> u64 {
        derive_seed(self.config.seed, &[task.code()])
    }

    fn alpha(&self) -> Result<f64> {
        self.model().find_alpha(None)
    }

    fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    fn series(&self, task: Task) -> Result<SkeletonSeries> {
        sim::simulate_skeleton(
            self.model(),
            self.config.h,
            self.config.series_len(),
            &self.config.simulation,
            self.seed(task),
        )
    }

    fn has_driver(&self) -> bool {
        match self.model() {
            LevyModel::CogarchCpp(p) => p.mu > 0.0,
            _ => true,
        }
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.out.join(name);
        write_atomic(&path, contents)?;
        Ok(path)
    }

    fn tail_scale(&self, alpha: f64, seed: u64) -> Result<theory::TheoryConstant> {
        let settings = EmpiricalTailSettings {
            n: self.config.series_len(),
            h: self.config.h,
            quantile: self.config.estimation.tail_quantile,
            seed,
            sim: self.config.simulation,
        };
        theory::tail_scale_c(self.model(), alpha, &settings)
    }
}

fn z_score(a: f64, sa: f64, b: f64, sb: f64) -> f64 {
    let se = (sa * sa + sb * sb).sqrt();
    if se > 0.0 {
        (a - b) / se
    } else if a == b {
        0.0
    } else {
        f64::INFINITY
    }
}

fn run_simulate(ctx: &mut Ctx) -> Result<()> {
    let name = Task::Simulate.name();
    let series = ctx.series(Task::Simulate)?;
    let mut buf = Vec::new();
    sim::write_series_csv(&series, &mut buf)?;
    let path = ctx.write("series.csv", &buf)?;
    ctx.artifacts.push(Artifact::Series { path });
    let n = ctx.config.series_len() as f64;
    ctx.push(
        ReportRow::new(name, "series_length", PLUMBING)
            .theory(n)
            .empirical(series.len() as f64)
            .absolute(0.0),
    );
    let positive = series.v.iter().all(|&v| v > 0.0 && v.is_finite());
    ctx.push(ReportRow::new(name, "volatility_positive", PLUMBING).with_pass(None, positive));
    Ok(())
}

fn run_constants(ctx: &mut Ctx) -> Result<()> {
    let name = Task::Constants.name();
    let seed = ctx.seed(Task::Constants);
    let alpha = ctx.alpha()?;
    let h = ctx.config.h;
    let model = *ctx.model();
    let mut row = ReportRow::new(name, "alpha", A_ROOT).theory(alpha);
    if let LevyModel::Nelson(p) = &model {
        row = row
            .empirical(1.0 + 2.0 * p.lambda / (p.sigma * p.sigma))
            .absolute(1e-10);
    }
    ctx.push(row);
    ctx.push(
        ReportRow::new(name, "laplace_exponent_at_alpha", A_ROOT)
            .theory(0.0)
            .empirical(model.laplace_exponent(alpha)?)
            .absolute(1e-9),
    );
    let report = model.check_conditions(4.0 + 1e-9);
    ctx.push(
        ReportRow::new(name, "moment_condition_d_above_4", A_RATES)
            .empirical(if report.holds_b { 1.0 } else { 0.0 })
            .with_pass(None, true),
    );

    let mc = ctx.config.monte_carlo.settings(derive_seed(seed, &[1]));
    let sup = theory::mc_sup_exponent(&model, alpha, h, &mc)?;
    ctx.push(ReportRow::new(name, format!("E_sup_exponent(h={h})"), A_SUP).theory(sup.value));
    let kappa = theory::frechet_constant(&model, alpha, &mc)?;
    let stable = kappa.audit.is_none_or(|a| a.stable);
    ctx.push(
        ReportRow::new(name, "kappa", A_KAPPA)
            .theory(kappa.value)
            .with_pass(None, stable),
    );
    let theta = theory::extremal_index_v(&model, alpha, h, &mc)?;
    let ok = theta.value > 0.0 && theta.value <= 1.0 + 3.0 * theta.std_error;
    ctx.push(
        ReportRow::new(name, format!("theta_V(h={h})"), A_THETA)
            .theory(theta.value)
            .with_pass(None, ok),
    );
    let c = ctx.tail_scale(alpha, derive_seed(seed, &[2]))?;
    ctx.push(ReportRow::new(name, "tail_scale_C", A_HILL).theory(c.value));
    ctx.push(
        ReportRow::new(name, "normalizer_a_n(n=max size)", A_KAPPA).theory(theory::normalizer_a_n(
            c.value,
            alpha,
            ctx.config.series_len() as f64,
        )?),
    );
    if ctx.has_driver() {
        let mc = ctx.config.monte_carlo.settings(derive_seed(seed, &[3]));
        let ti = theory::tail_constant_i(&model, alpha, h, &mc)?;
        ctx.push(ReportRow::new(name, format!("tail_constant_I(h={h})"), A_INC).theory(ti.value));
        let ti_theta = theory::extremal_index_i(&model, alpha, h, 16, &mc)?;
        ctx.push(
            ReportRow::new(name, format!("theta_I(h={h})"), A_THETA)
                .theory(ti_theta.value)
                .with_pass(None, ti_theta.value >= 0.0),
        );
    }
    Ok(())
}

fn run_verify(ctx: &mut Ctx) -> Result<()> {
    let name = Task::VerifyIdentities.name();
    let seed = ctx.seed(Task::VerifyIdentities);
    let alpha = ctx.alpha()?;
    let model = *ctx.model();
    let zmax = ctx.config.tolerances.z_max;
    let h = ctx.config.h;
    let windows: Vec<f64> = [h, 2.0 * h].into_iter().filter(|&w| w != 1.0).collect();
    for (i, w) in windows.into_iter().enumerate() {
        let mc = ctx
            .config
            .monte_carlo
            .settings(derive_seed(seed, &[1, i as u64]));
        let check = theory::verify_window_scaling(&model, alpha, w, &mc)?;
        ctx.push(
            ReportRow::new(name, format!("window_scaling(h={w})"), A_SCALING)
                .theory(check.rhs.value)
                .empirical(check.lhs.value)
                .with_pass(Some(zmax), check.z_score.abs() <= zmax),
        );
    }
    if let LevyModel::CogarchCpp(p) = &model {
        if p.mu > 0.0 {
            let mc = ctx.config.monte_carlo.settings(derive_seed(seed, &[2]));
            let check = theory::verify_first_jump_identity(p, alpha, &mc)?;
            ctx.push(
                ReportRow::new(name, "first_jump_identity", A_FIRST_JUMP)
                    .theory(check.rhs.value)
                    .empirical(check.lhs.value)
                    .with_pass(Some(zmax), check.z_score.abs() <= zmax),
            );
            let exp = Exp::new(p.mu).expect("positive rate");
            let rate = alpha * p.c;
            let draws = par_map(mc.n_paths, |i| {
                let mut rng = stream_rng(derive_seed(seed, &[3]), i as u64);
                (-rate * exp.sample(&mut rng)).exp()
            });
            let (m, se) = mean_se(&draws);
            let exact = theory::first_jump_discount(p.mu, alpha, p.c);
            ctx.push(
                ReportRow::new(name, "first_arrival_discount", A_FIRST_JUMP)
                    .theory(exact)
                    .empirical(m)
                    .with_pass(Some(zmax), z_score(m, se, exact, 0.0).abs() <= zmax),
            );
        }
    }
    Ok(())
}

fn hill_ks(n: usize, k: usize) -> Vec<usize> {
    let hi = (4 * k).min(n / 5).max(3);
    let mut ks: Vec<usize> = (0..=48)
        .map(|i| (2.0 * (hi as f64 / 2.0).powf(i as f64 / 48.0)).round() as usize)
        .collect();
    ks.dedup();
    ks
}

fn run_tails(ctx: &mut Ctx) -> Result<()> {
    let name = Task::Tails.name();
    let seed = ctx.seed(Task::Tails);
    let alpha = ctx.alpha()?;
    let model = *ctx.model();
    let tol = ctx.config.tolerances;
    let est = ctx.config.estimation.clone();
    let h = ctx.config.h;
    let series = ctx.series(Task::Tails)?;
    let v = series.v_blocks();
    let k = est
        .hill_k
        .unwrap_or_else(|| stats::tail::default_k_order(v.len()));
    let hill = stats::hill_estimator(v, k)?;
    ctx.push(
        ReportRow::new(name, format!("hill_alpha_V(k={k})"), A_HILL)
            .theory(alpha)
            .empirical(hill.alpha_hat)
            .relative(tol.hill_rel),
    );
    let path = stats::hill_path(v, &hill_ks(v.len(), k))?;
    let mut csv = String::from("k,alpha_hat\n");
    for e in &path {
        csv.push_str(&format!("{},{}\n", e.k_order, e.alpha_hat));
    }
    let p = ctx.write("hill.csv", csv.as_bytes())?;
    ctx.artifacts.push(Artifact::HillPath { path: p, alpha });

    let mc = ctx.config.monte_carlo.settings(derive_seed(seed, &[1]));
    let sup = theory::mc_sup_exponent(&model, alpha, h, &mc)?;
    let ratio = stats::tail_ratio(
        &series.block_max,
        v,
        est.tail_quantile,
        TailTransform::Identity,
    )?;
    ctx.push(
        ReportRow::new(
            name,
            format!("tail_ratio_H_V(q={})", est.tail_quantile),
            A_SUP,
        )
        .theory(sup.value)
        .empirical(ratio)
        .relative(tol.tail_ratio_rel),
    );
    if ctx.has_driver() {
        let ti = theory::tail_constant_i(&model, alpha, h, &mc)?;
        let ratio = stats::tail_ratio(
            &series.increments,
            v,
            est.tail_quantile,
            TailTransform::Square,
        )?;
        ctx.push(
            ReportRow::new(
                name,
                format!("tail_ratio_I_V2(q={})", est.tail_quantile),
                A_INC,
            )
            .theory(ti.value)
            .empirical(ratio)
            .relative(tol.tail_ratio_rel),
        );
    }
    Ok(())
}

fn run_extremes(ctx: &mut Ctx) -> Result<()> {
    let name = Task::Extremes.name();
    let seed = ctx.seed(Task::Extremes);
    let alpha = ctx.alpha()?;
    let model = *ctx.model();
    let tol = ctx.config.tolerances;
    let est = ctx.config.estimation.clone();
    let h = ctx.config.h;
    let series = ctx.series(Task::Extremes)?;
    let hk = &series.block_max;
    let threshold = quantile(hk, est.threshold_quantile);
    let mc = ctx.config.monte_carlo.settings(derive_seed(seed, &[1]));
    let theta = theory::extremal_index_v(&model, alpha, h, &mc)?;

    let blocks = stats::extremal_index_blocks(hk, threshold, est.block_len)?;
    let z = z_score(blocks.theta_hat, blocks.se, theta.value, theta.std_error);
    let interior =
        blocks.theta_hat > 0.0 && blocks.theta_hat < 1.0 && theta.value > 0.0 && theta.value < 1.0;
    ctx.push(
        ReportRow::new(
            name,
            format!("theta_blocks_H(b={})", est.block_len),
            A_THETA,
        )
        .theory(theta.value)
        .empirical(blocks.theta_hat)
        .with_pass(Some(tol.z_max), z.abs() <= tol.z_max && interior),
    );
    let runs = stats::extremal_index_runs(hk, threshold, est.run_gap)?;
    let z = z_score(runs.theta_hat, runs.se, blocks.theta_hat, blocks.se);
    ctx.push(
        ReportRow::new(
            name,
            format!("theta_runs_vs_blocks(gap={})", est.run_gap),
            A_THETA,
        )
        .theory(blocks.theta_hat)
        .empirical(runs.theta_hat)
        .with_pass(Some(tol.z_max), z.abs() <= tol.z_max),
    );
    let clusters = stats::cluster_size_distribution(hk, threshold, Some(est.run_gap))?;
    let inv = 1.0 / theta.value;
    let z = z_score(clusters.mean, clusters.se, inv, theta.std_error * inv * inv);
    ctx.push(
        ReportRow::new(name, "mean_cluster_size", A_THETA)
            .theory(inv)
            .empirical(clusters.mean)
            .with_pass(Some(tol.z_max), z.abs() <= tol.z_max),
    );

    let kappa = theory::frechet_constant(&model, alpha, &mc)?;
    let c = ctx.tail_scale(alpha, derive_seed(seed, &[2]))?;
    let settings = stats::PartialMaximaSettings {
        n_list: ctx.config.sizes.clone(),
        n_reps: ctx.config.reps,
        seed: derive_seed(seed, &[3]),
        sim: ctx.config.simulation,
    };
    let points = stats::partial_maxima_check(&model, alpha, c.value, kappa.value, &settings)?;
    let last = points.len() - 1;
    for (i, p) in points.iter().enumerate() {
        let row =
            ReportRow::new(name, format!("ks_running_max(n={})", p.n), A_KAPPA).empirical(p.ks);
        ctx.push(if i == last {
            row.at_most(tol.ks_max)
        } else {
            row
        });
    }
    let top = &points[last];
    let mut csv = String::from("normalized_max\n");
    for x in &top.sample {
        csv.push_str(&format!("{x}\n"));
    }
    let path = ctx.write("maxima.csv", csv.as_bytes())?;
    ctx.artifacts.push(Artifact::MaximaSample {
        path,
        n: top.n,
        kappa: kappa.value,
        alpha,
    });
    Ok(())
}

fn run_rates(ctx: &mut Ctx) -> Result<()> {
    let name = Task::AcfRates.name();
    let seed = ctx.seed(Task::AcfRates);
    let alpha = ctx.alpha()?;
    let model = *ctx.model();
    let mut stats_list = vec![if alpha > 2.0 {
        RateStatistic::AcvV
    } else {
        RateStatistic::AcfV
    }];
    if ctx.has_driver() {
        stats_list.push(if alpha > 1.0 {
            RateStatistic::AcvI
        } else {
            RateStatistic::AcfI
        });
    }
    for (i, statistic) in stats_list.into_iter().enumerate() {
        let settings = stats::RateSettings {
            statistic,
            lag: ctx.config.estimation.rate_lag,
            n_list: ctx.config.sizes.clone(),
            n_reps: ctx.config.reps,
            seed: derive_seed(seed, &[i as u64]),
            h: ctx.config.h,
            centered: false,
            sim: ctx.config.simulation,
        };
        let d = stats::rate_diagnostic(SeriesSource::Model(&model), &settings)?;
        let target = format!("rate_slope_{}(lag={})", statistic.name(), d.lag);
        let row = ReportRow::new(name, target, A_RATES).empirical(d.slope);
        ctx.push(match stats::expected_rate_slope(statistic, alpha) {
            Some(e) => row.theory(e).absolute(ctx.config.tolerances.rate_slope),
            None => row,
        });
        let mut csv = String::from("n,iqr\n");
        for p in &d.points {
            csv.push_str(&format!("{},{}\n", p.n, p.iqr));
        }
        let file = format!("rates_{}_lag{}.csv", statistic.name(), d.lag);
        let path = ctx.write(&file, csv.as_bytes())?;
        ctx.artifacts.push(Artifact::RateRegression {
            path,
            statistic: statistic.name().to_string(),
            lag: d.lag,
            slope: d.slope,
            intercept: d.intercept,
        });
    }
    Ok(())
}

fn run_integrated(ctx: &mut Ctx) -> Result<()> {
    let name = Task::IntegratedLimit.name();
    let alpha = ctx.alpha()?;
    let tol = ctx.config.tolerances;
    let settings = stats::IntegratedLimitSettings {
        t_list: ctx.config.estimation.t_list.clone(),
        n_reps: ctx.config.reps,
        seed: ctx.seed(Task::IntegratedLimit),
        sim: ctx.config.simulation,
        max_abs_skew: tol.skew_max,
        max_abs_excess_kurtosis: tol.excess_kurtosis_max,
        max_ks: tol.normal_ks_max,
        hill_rel_tol: tol.hill_rel,
        slope_tol: tol.integrated_slope,
    };
    let r = stats::integrated_limit_check(ctx.model(), alpha, &settings)?;
    ctx.push(
        ReportRow::new(name, "symmetric_driver", A_INTEGRATED)
            .empirical(if r.symmetric_driver { 1.0 } else { 0.0 })
            .with_pass(None, true),
    );
    match r.regime {
        stats::IntegratedRegime::Gaussian => {
            let t = r.t_max;
            let rows = [
                ("skewness", r.skewness, tol.skew_max),
                (
                    "excess_kurtosis",
                    r.excess_kurtosis,
                    tol.excess_kurtosis_max,
                ),
                ("ks_vs_fitted_normal", r.ks_normal, tol.normal_ks_max),
            ];
            for (label, value, limit) in rows {
                let v = value.unwrap_or(f64::NAN);
                let row = ReportRow::new(name, format!("{label}(t={t})"), A_INTEGRATED);
                ctx.push(if label.starts_with("ks") {
                    row.empirical(v).at_most(limit)
                } else {
                    row.theory(0.0).empirical(v).absolute(limit)
                });
            }
        }
        stats::IntegratedRegime::Stable => {
            ctx.push(
                ReportRow::new(name, "hill_index_of_sums", A_INTEGRATED)
                    .theory(2.0 * alpha)
                    .empirical(r.hill_index.unwrap_or(f64::NAN))
                    .relative(tol.hill_rel),
            );
            ctx.push(
                ReportRow::new(name, "log_iqr_scaling_slope", A_INTEGRATED)
                    .theory(r.expected_slope.unwrap_or(f64::NAN))
                    .empirical(r.slope.unwrap_or(f64::NAN))
                    .absolute(tol.integrated_slope),
            );
        }
    }
    Ok(())
}

fn run_task(ctx: &mut Ctx, task: Task) -> Result<()> {
    match task {
        Task::Simulate => run_simulate(ctx),
        Task::Constants => run_constants(ctx),
        Task::VerifyIdentities => run_verify(ctx),
        Task::Tails => run_tails(ctx),
        Task::Extremes => run_extremes(ctx),
        Task::AcfRates => run_rates(ctx),
        Task::IntegratedLimit => run_integrated(ctx),
    }
}

/// Run the tasks in order into `out`, writing `report.csv` and the echoed
/// config. A task error stops the run, still writes the partial report
/// (marked `# FAILED`) and is returned with the task name attached.
pub fn run_experiment_in(config: &ExperimentConfig, out: &Path) -> Result<ExperimentReport> {
    config.validate()?;
    fs::create_dir_all(out)?;
    write_atomic(&out.join(CONFIG_ECHO_FILE), config.to_toml().as_bytes())?;
    let mut ctx = Ctx {
        config,
        out,
        rows: Vec::new(),
        artifacts: Vec::new(),
    };
    let mut failure = None;
    for &task in &config.tasks {
        if let Err(e) = run_task(&mut ctx, task) {
            failure = Some(Error::Task {
                task: task.name().to_string(),
                source: Box::new(e),
            });
            break;
        }
    }
    let report = ExperimentReport {
        seed: config.seed,
        model_id: config.model.model_id(),
        rows: ctx.rows,
        artifacts: ctx.artifacts,
        failed: failure.as_ref().map(|e| e.to_string()),
    };
    write_atomic(&out.join(REPORT_FILE), report.to_csv()?.as_bytes())?;
    match failure {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

/// [`run_experiment_in`] with the configured output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_in(config, &config.output_dir)
}
