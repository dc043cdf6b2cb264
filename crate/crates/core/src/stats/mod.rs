//! Estimators for simulated or external series.

pub mod acf;
pub mod extremal;
pub mod limits;
pub mod rates;
pub mod summary;
pub mod tail;

pub use acf::{sample_acv, sample_acv_with, AcfEstimate};
pub use extremal::{
    cluster_size_distribution, extremal_index_blocks, extremal_index_runs, ClusterSizes,
    ExtremalIndexEstimate, ExtremalMethod,
};
pub use limits::{
    frechet_limit_cdf, integrated_limit_check, partial_maxima_check, IntegratedLimitReport,
    IntegratedLimitSettings, IntegratedRegime, PartialMaximaPoint, PartialMaximaSettings,
};
pub use rates::{
    expected_rate_slope, rate_diagnostic, RateDiagnostic, RateSettings, RateStatistic, SeriesSource,
};
pub use tail::{hill_estimator, hill_path, tail_ratio, TailEstimate, TailTransform};
