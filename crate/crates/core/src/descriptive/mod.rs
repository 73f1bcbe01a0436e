//! RPV, z-scores, quantile summaries, area medians, correlations and robust
//! fit lines.

pub mod scatter;
pub mod stats;
pub mod theil_sen;

pub use scatter::{emit_scatter, ScatterData, ScatterPoint};
pub use stats::{
    compute_rpv, correlation_matrix, group_medians, mean, median_in_place, pearson, quantile,
    quantile_summary, sample_sd, zscores, CorrelationMatrix, GroupMedians, QuantileSummary,
};
pub use theil_sen::{theil_sen_fit, TheilSenLine};
