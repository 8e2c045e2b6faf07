use serde::{Deserialize, Serialize};

use super::grid::PhaseSpaceGrid;
use crate::error::{Error, Result};
use crate::stats::pairwise_sum;

/// Normalized grids must sum to one within this tolerance.
const UNIT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMode {
    /// `sum L H / sqrt(sum L^2 sum H^2)`; 1 for identical grids.
    #[default]
    Normalized,
    /// `sum L H` on the shared discretization.
    Raw,
}

/// Overlap of two normalized, comparable distributions. Symmetric in its
/// arguments bit for bit.
pub fn overlap_measure(l: &PhaseSpaceGrid, h: &PhaseSpaceGrid, mode: OverlapMode) -> Result<f64> {
    l.check_comparable(h)?;
    for g in [l, h] {
        let total = g.total();
        if (total - 1.0).abs() > UNIT_SUM_TOLERANCE {
            return Err(Error::Config(format!("{:?} grid sums to {total}, not 1", g.kind)));
        }
    }
    let products: Vec<f64> = l.values.iter().zip(&h.values).map(|(a, b)| a * b).collect();
    let cross = pairwise_sum(&products);
    Ok(match mode {
        OverlapMode::Raw => cross,
        OverlapMode::Normalized => {
            let sq = |g: &PhaseSpaceGrid| {
                let v: Vec<f64> = g.values.iter().map(|a| a * a).collect();
                pairwise_sum(&v)
            };
            let denom = (sq(l) * sq(h)).sqrt();
            if denom > 0.0 {
                (cross / denom).min(1.0)
            } else {
                0.0
            }
        }
    })
}
