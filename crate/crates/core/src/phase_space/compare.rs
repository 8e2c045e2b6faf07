use serde::{Deserialize, Serialize};

use super::grid::PhaseSpaceGrid;
use super::overlap::{overlap_measure, OverlapMode};
use crate::error::{Error, Result};
use crate::stats::{mean, settle_band, settle_time};

/// Default overlap above which two distributions count as the same structure.
pub const SIMILARITY_THRESHOLD: f64 = 0.9;

/// One side of a comparison: a final-step distribution and its current series.
#[derive(Debug, Clone)]
pub struct RunSide {
    pub label: String,
    pub grid: PhaseSpaceGrid,
    /// `J(t)` for `t = 0..=steps`.
    pub current: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideSummary {
    pub label: String,
    pub current: Vec<f64>,
    /// Mean over the last quarter of the series.
    pub asymptote: f64,
    pub settle_time: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub overlap: f64,
    pub overlap_raw: f64,
    pub threshold: f64,
    pub similar: bool,
    pub first: SideSummary,
    pub second: SideSummary,
}

fn summarize(side: &RunSide) -> Result<SideSummary> {
    if side.current.is_empty() {
        return Err(Error::Config(format!("run '{}' has no current series", side.label)));
    }
    let n = side.current.len();
    let asymptote = mean(&side.current[n - (n / 4).max(1)..]);
    Ok(SideSummary {
        label: side.label.clone(),
        current: side.current.clone(),
        asymptote,
        settle_time: settle_time(&side.current, asymptote, settle_band(asymptote)),
    })
}

/// Bundles the normalized and raw overlaps with both current series and
/// flags whether the overlap reaches `threshold`.
pub fn comparison_report(a: &RunSide, b: &RunSide, threshold: f64) -> Result<ComparisonReport> {
    let overlap = overlap_measure(&a.grid, &b.grid, OverlapMode::Normalized)?;
    let overlap_raw = overlap_measure(&a.grid, &b.grid, OverlapMode::Raw)?;
    Ok(ComparisonReport {
        overlap,
        overlap_raw,
        threshold,
        similar: overlap > threshold,
        first: summarize(a)?,
        second: summarize(b)?,
    })
}
