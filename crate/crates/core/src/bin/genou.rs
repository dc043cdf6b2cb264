use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use genou::experiment::{self, emit_plots, ExperimentConfig, Task};
use genou::rng::with_workers;
use genou::sim::read_series_csv;
use genou::stats;
use genou::{Error, Result};

#[derive(Parser)]
#[command(
    name = "genou",
    version,
    about = "genOU volatility simulation and extreme-value diagnostics"
)]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, env = "GENOU_OUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Column {
    V,
    H,
    I,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a stationary skeleton and write series.csv.
    Simulate(RunArgs),
    /// Evaluate the tail index and Monte Carlo limit constants.
    Constants(RunArgs),
    /// Check the window-scaling and first-jump identities.
    Verify(RunArgs),
    /// Estimate tail and dependence statistics of an external series.
    Estimate {
        /// Single-column or k,V,H,I CSV.
        series: PathBuf,
        #[arg(long, value_enum, default_value = "v")]
        column: Column,
        /// Hill order statistics (default n^0.6).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 0.98)]
        threshold_quantile: f64,
        /// Block length and run gap (default ceil(sqrt(n))).
        #[arg(long)]
        block_len: Option<usize>,
        #[arg(long, default_value_t = 5)]
        max_lag: usize,
        /// Write estimates.csv here instead of stdout.
        #[arg(long, env = "GENOU_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Run every task of a config and write the report.
    Experiment {
        #[command(flatten)]
        run: RunArgs,
        /// Render SVG plots regardless of the config.
        #[arg(long)]
        plots: bool,
    },
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Parse(_) | Error::Validation(_) | Error::InvalidConfig(_) | Error::InvalidModel(_)
    )
}

fn load(args: &RunArgs, only: Option<Task>) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::Parse(format!("{}: {e}", args.config.display())))?;
    let mut config = experiment::parse_config(&text)?;
    if let Some(task) = only {
        config.tasks = vec![task];
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn run(args: &RunArgs, only: Option<Task>, plots: bool) -> Result<bool> {
    let config = load(args, only)?;
    let report = experiment::run_experiment(&config)?;
    if plots || config.plots {
        emit_plots(&report, &config.output_dir)?;
    }
    let failed: Vec<_> = report.rows.iter().filter(|r| !r.pass).collect();
    for r in &failed {
        eprintln!("FAIL {} {} [{}]", r.task, r.target_name, r.anchor);
    }
    eprintln!(
        "{} rows, {} failed; report in {}",
        report.rows.len(),
        failed.len(),
        config.output_dir.join(experiment::REPORT_FILE).display()
    );
    Ok(failed.is_empty())
}

fn estimate(
    series: &Path,
    column: Column,
    k: Option<usize>,
    threshold_quantile: f64,
    block_len: Option<usize>,
    max_lag: usize,
    out: Option<&Path>,
) -> Result<bool> {
    let data = read_series_csv(fs::File::open(series)?)?;
    let x = match column {
        Column::V => data.v,
        Column::H => data.block_max,
        Column::I => data.increments,
    };
    if x.is_empty() {
        return Err(Error::InsufficientData("selected column is empty".into()));
    }
    let n = x.len();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["estimator", "params", "value", "se"])?;
    let k = k.unwrap_or_else(|| stats::tail::default_k_order(n));
    let positive: Vec<f64> = x.iter().copied().filter(|v| *v > 0.0).collect();
    let hill = stats::hill_estimator(&positive, k)?;
    w.write_record([
        "hill",
        &format!("k={k}"),
        &hill.alpha_hat.to_string(),
        &hill.se.to_string(),
    ])?;
    let threshold = stats::summary::quantile(&x, threshold_quantile);
    let b = block_len.unwrap_or_else(|| stats::extremal::default_block_len(n));
    let blocks = stats::extremal_index_blocks(&x, threshold, b)?;
    let params = format!("threshold={threshold};block_len={b}");
    w.write_record([
        "extremal_index_blocks",
        &params,
        &blocks.theta_hat.to_string(),
        &blocks.se.to_string(),
    ])?;
    let runs = stats::extremal_index_runs(&x, threshold, b)?;
    let params = format!("threshold={threshold};run_gap={b}");
    w.write_record([
        "extremal_index_runs",
        &params,
        &runs.theta_hat.to_string(),
        &runs.se.to_string(),
    ])?;
    let clusters = stats::cluster_size_distribution(&x, threshold, Some(b))?;
    w.write_record([
        "mean_cluster_size",
        &params,
        &clusters.mean.to_string(),
        &clusters.se.to_string(),
    ])?;
    let acf = stats::sample_acv(&x, max_lag)?;
    for l in 0..=max_lag {
        w.write_record([
            "acv",
            &format!("lag={l}"),
            &acf.gamma_hat[l].to_string(),
            "",
        ])?;
        w.write_record(["acf", &format!("lag={l}"), &acf.rho_hat[l].to_string(), ""])?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    match out {
        Some(dir) => {
            let path = dir.join("estimates.csv");
            experiment::report::write_atomic(&path, &body)?;
            eprintln!("estimates in {}", path.display());
        }
        None => print!("{}", String::from_utf8_lossy(&body)),
    }
    Ok(true)
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate(a) => run(&a, Some(Task::Simulate), false),
        Command::Constants(a) => run(&a, Some(Task::Constants), false),
        Command::Verify(a) => run(&a, Some(Task::VerifyIdentities), false),
        Command::Experiment { run: a, plots } => run(&a, None, plots),
        Command::Estimate {
            series,
            column,
            k,
            threshold_quantile,
            block_len,
            max_lag,
            out,
        } => estimate(
            &series,
            column,
            k,
            threshold_quantile,
            block_len,
            max_lag,
            out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers;
    match with_workers(workers, move || dispatch(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if is_usage_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
