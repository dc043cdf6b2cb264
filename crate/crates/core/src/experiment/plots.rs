//! Static SVG figures from experiment artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::error::{Error, Result};
use crate::experiment::report::{Artifact, ExperimentReport};
use crate::stats::frechet_limit_cdf;
use crate::stats::summary::{quantile_sorted, sorted};

const SIZE: (u32, u32) = (720, 480);

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

fn read_columns(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(str::parse).collect();
        rows.push(vals.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?);
    }
    Ok(rows)
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
        (l.min(v), h.max(v))
    });
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

fn hill_plot(src: &Path, alpha: f64, dst: &Path) -> Result<()> {
    let rows = read_columns(src)?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    let (x0, x1) = bounds(pts.iter().map(|p| p.0));
    let (y0, y1) = bounds(pts.iter().map(|p| p.1).chain([alpha]));
    let root = SVGBackend::new(dst, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Hill plot", ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("k")
        .y_desc("alpha_hat")
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new(pts, &BLUE))
        .map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new([(x0, alpha), (x1, alpha)], &RED))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

fn rate_plot(
    src: &Path,
    statistic: &str,
    lag: usize,
    slope: f64,
    intercept: f64,
    dst: &Path,
) -> Result<()> {
    let rows = read_columns(src)?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].ln(), r[1].ln())).collect();
    let (x0, x1) = bounds(pts.iter().map(|p| p.0));
    let fit = [(x0, intercept + slope * x0), (x1, intercept + slope * x1)];
    let (y0, y1) = bounds(pts.iter().map(|p| p.1).chain(fit.iter().map(|p| p.1)));
    let root = SVGBackend::new(dst, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(
            format!("{statistic} lag {lag}: slope {slope:.3}"),
            ("sans-serif", 20),
        )
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("log n")
        .y_desc("log IQR")
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(pts.iter().map(|&p| Circle::new(p, 4, BLUE.filled())))
        .map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new(fit, &RED))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// Horizontal range of the CDF overlay: the 1% and 99% sample quantiles.
pub fn cdf_overlay_range(sample: &[f64]) -> (f64, f64) {
    let s = sorted(sample);
    (quantile_sorted(&s, 0.01), quantile_sorted(&s, 0.99))
}

fn cdf_plot(src: &Path, kappa: f64, alpha: f64, dst: &Path) -> Result<()> {
    let sample: Vec<f64> = read_columns(src)?.into_iter().map(|r| r[0]).collect();
    let s = sorted(&sample);
    let (lo, hi) = cdf_overlay_range(&s);
    let n = s.len() as f64;
    let empirical: Vec<(f64, f64)> = s
        .iter()
        .enumerate()
        .filter(|(_, &x)| x >= lo && x <= hi)
        .map(|(i, &x)| (x, (i as f64 + 1.0) / n))
        .collect();
    let limit: Vec<(f64, f64)> = (0..=200)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / 200.0;
            (x, frechet_limit_cdf(x, kappa, alpha))
        })
        .collect();
    let root = SVGBackend::new(dst, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(
            "normalized running maxima vs Frechet limit",
            ("sans-serif", 20),
        )
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(lo..hi, 0.0..1.0)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("x")
        .y_desc("P(M(n)/a_n <= x)")
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new(empirical, &BLUE))
        .map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new(limit, &RED))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// Render one SVG per plottable artifact of `report` into `out`.
pub fn emit_plots(report: &ExperimentReport, out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for artifact in &report.artifacts {
        let src = artifact.path();
        if !src.is_file() {
            return Err(Error::MissingArtifact(src.to_path_buf()));
        }
        let dst = match artifact {
            Artifact::Series { .. } => continue,
            Artifact::HillPath { alpha, .. } => {
                let dst = out.join("hill.svg");
                hill_plot(src, *alpha, &dst)?;
                dst
            }
            Artifact::RateRegression {
                statistic,
                lag,
                slope,
                intercept,
                ..
            } => {
                let dst = out.join(format!("rate_{statistic}_lag{lag}.svg"));
                rate_plot(src, statistic, *lag, *slope, *intercept, &dst)?;
                dst
            }
            Artifact::MaximaSample { kappa, alpha, .. } => {
                let dst = out.join("maxima_cdf.svg");
                cdf_plot(src, *kappa, *alpha, &dst)?;
                dst
            }
        };
        written.push(dst);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_plots(&ExperimentReport::default(), dir.path()).unwrap();
        assert!(files.is_empty());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn missing_artifact_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let report = ExperimentReport {
            artifacts: vec![Artifact::HillPath {
                path: dir.path().join("nope.csv"),
                alpha: 2.0,
            }],
            ..Default::default()
        };
        assert!(matches!(
            emit_plots(&report, dir.path()),
            Err(Error::MissingArtifact(_))
        ));
    }

    #[test]
    fn overlay_range_covers_central_sample() {
        let x: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_eq!(cdf_overlay_range(&x), (1.0, 99.0));
    }

    #[test]
    fn rate_plot_is_svg() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("r.csv");
        fs::write(&src, "n,iqr\n100,1\n1000,0.3\n10000,0.1\n").unwrap();
        let report = ExperimentReport {
            artifacts: vec![Artifact::RateRegression {
                path: src,
                statistic: "acv_V".into(),
                lag: 1,
                slope: -0.5,
                intercept: 2.3,
            }],
            ..Default::default()
        };
        let files = emit_plots(&report, dir.path()).unwrap();
        assert_eq!(files.len(), 1);
        let svg = fs::read_to_string(&files[0]).unwrap();
        assert!(svg.starts_with("<svg"), "{}", &svg[..40]);
    }
}
