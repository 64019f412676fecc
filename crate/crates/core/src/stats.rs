//! Cross-run summary statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{pairwise_sum, pairwise_sum_by, sorted_median, sorted_quantile};

/// Quartiles use linear interpolation between order statistics at 1-based
/// rank `(R - 1) p + 1`.
pub const QUANTILE_RULE: &str = "linear interpolation between order statistics at rank (R-1)p+1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mean: f64,
    /// Sample standard deviation (divisor R - 1; zero when R = 1).
    pub sd: f64,
    /// `sd / sqrt(R)`.
    pub se: f64,
    pub median: f64,
    pub iqr: f64,
    /// `iqr / sqrt(R)`.
    pub se_equivalent: f64,
    pub runs: usize,
}

pub fn summarize(values: &[f64]) -> Result<RunSummary> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(col) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput { row: 0, col });
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let r = sorted.len();
    let rf = r as f64;
    // Summing the sorted copy keeps the result independent of input order.
    let mean = pairwise_sum(&sorted) / rf;
    let sd = if r > 1 {
        (pairwise_sum_by(r, |k| (sorted[k] - mean).powi(2)) / (rf - 1.0)).sqrt()
    } else {
        0.0
    };
    let iqr = sorted_quantile(&sorted, 0.75) - sorted_quantile(&sorted, 0.25);
    Ok(RunSummary {
        mean,
        sd,
        se: sd / rf.sqrt(),
        median: sorted_median(&sorted),
        iqr,
        se_equivalent: iqr / rf.sqrt(),
        runs: r,
    })
}
