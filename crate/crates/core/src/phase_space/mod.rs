//! Phase-space distributions and their overlap.

mod compare;
mod grid;
mod husimi;
mod overlap;

pub use compare::{comparison_report, ComparisonReport, RunSide, SideSummary, SIMILARITY_THRESHOLD};
pub use grid::{GridKind, GridMeta, PhaseSpaceGrid};
pub use husimi::{husimi_grid, CoherentFrame};
pub use overlap::{overlap_measure, OverlapMode};
