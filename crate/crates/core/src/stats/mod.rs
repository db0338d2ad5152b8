//! Classical test theory and calibration comparison statistics.

mod compare;
mod ctt;

pub use compare::{average_ranks, bias, compare_calibrations, rmse, spearman, ComparisonSummary, StatComparison};
pub use ctt::{cronbach_alpha, ctt_table, item_total_correlation, pearson, proportion_correct, CttItem, CttTable};
