//! Extremal index and cluster-size estimators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::stats::summary::{mean_se, variance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremalMethod {
    Blocks,
    Runs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremalIndexEstimate {
    pub theta_hat: f64,
    pub method: ExtremalMethod,
    pub threshold: f64,
    /// Block length (blocks method) or run gap (runs method).
    pub block_len: usize,
    pub se: f64,
}

pub const MIN_EXCEEDANCES: usize = 50;
pub const BOOTSTRAP_RESAMPLES: usize = 200;
const BOOTSTRAP_SEED: u64 = 0x5eed_b007;

/// Default block length and run gap, `ceil(sqrt(n))`.
pub fn default_block_len(n: usize) -> usize {
    (n as f64).sqrt().ceil() as usize
}

fn count_exceedances(data: &[f64], threshold: f64) -> Result<usize> {
    let n = data.iter().filter(|&&x| x > threshold).count();
    if n == 0 {
        return Err(Error::NoExceedances { threshold });
    }
    if n < MIN_EXCEEDANCES {
        return Err(Error::TooFewExceedances {
            found: n,
            needed: MIN_EXCEEDANCES,
        });
    }
    Ok(n)
}

/// Blocks estimator: blocks holding an exceedance over total exceedances,
/// with a 200-resample block-bootstrap standard error.
pub fn extremal_index_blocks(
    data: &[f64],
    threshold: f64,
    block_len: usize,
) -> Result<ExtremalIndexEstimate> {
    if block_len == 0 {
        return Err(Error::InvalidConfig("block_len must be >= 1".into()));
    }
    count_exceedances(data, threshold)?;
    let counts: Vec<usize> = data
        .chunks(block_len)
        .map(|b| b.iter().filter(|&&x| x > threshold).count())
        .collect();
    let ratio = |blocks: &mut dyn Iterator<Item = usize>| {
        let (mut hit, mut total) = (0usize, 0usize);
        for c in blocks {
            hit += (c > 0) as usize;
            total += c;
        }
        if total == 0 {
            1.0
        } else {
            (hit as f64 / total as f64).clamp(0.0, 1.0)
        }
    };
    let theta_hat = ratio(&mut counts.iter().copied());
    let mut rng = stream_rng(BOOTSTRAP_SEED, 0);
    let m = counts.len();
    let boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| ratio(&mut (0..m).map(|_| counts[rng.random_range(0..m)])))
        .collect();
    Ok(ExtremalIndexEstimate {
        theta_hat,
        method: ExtremalMethod::Blocks,
        threshold,
        block_len,
        se: variance(&boot).sqrt(),
    })
}

/// Cluster sizes (exceedances per cluster) under the runs declustering rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSizes {
    /// `histogram[s]` counts clusters holding exactly `s` exceedances.
    pub histogram: Vec<usize>,
    pub n_clusters: usize,
    pub mean: f64,
    pub se: f64,
    pub threshold: f64,
    /// `None` merges everything into one cluster.
    pub run_gap: Option<usize>,
}

fn cluster_sizes(data: &[f64], threshold: f64, run_gap: Option<usize>) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut current = 0usize;
    let mut quiet = 0usize;
    for &x in data {
        if x > threshold {
            if current > 0 && run_gap.is_some_and(|g| quiet >= g) {
                sizes.push(current);
                current = 0;
            }
            current += 1;
            quiet = 0;
        } else {
            quiet += 1;
        }
    }
    if current > 0 {
        sizes.push(current);
    }
    sizes
}

/// Clusters are maximal groups of exceedances separated by at least
/// `run_gap` consecutive non-exceedances.
pub fn cluster_size_distribution(
    data: &[f64],
    threshold: f64,
    run_gap: Option<usize>,
) -> Result<ClusterSizes> {
    if run_gap == Some(0) {
        return Err(Error::InvalidConfig("run_gap must be >= 1".into()));
    }
    count_exceedances(data, threshold)?;
    let sizes = cluster_sizes(data, threshold, run_gap);
    let max = sizes.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0usize; max + 1];
    for &s in &sizes {
        histogram[s] += 1;
    }
    let as_f64: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let (mean, se) = mean_se(&as_f64);
    Ok(ClusterSizes {
        histogram,
        n_clusters: sizes.len(),
        mean,
        se,
        threshold,
        run_gap,
    })
}

/// Runs estimator `1 / mean cluster size`, with a delta-method standard error.
pub fn extremal_index_runs(
    data: &[f64],
    threshold: f64,
    run_gap: usize,
) -> Result<ExtremalIndexEstimate> {
    let clusters = cluster_size_distribution(data, threshold, Some(run_gap))?;
    let theta_hat = (1.0 / clusters.mean).clamp(0.0, 1.0);
    Ok(ExtremalIndexEstimate {
        theta_hat,
        method: ExtremalMethod::Runs,
        threshold,
        block_len: run_gap,
        se: theta_hat * theta_hat * clusters.se,
    })
}
