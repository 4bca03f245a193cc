//! Forecast metrics, the mutual-information diagnostic and the ablation harness.

mod ablation;
mod metrics;
mod mi;

pub use ablation::{run_ablation, AblationRow, AblationTable, ModeSummary};
pub use metrics::{compute_metrics, MetricReport};
pub use mi::{mutual_information, plugin_mi, quantile_bins, MIReport, DEFAULT_BINS};
