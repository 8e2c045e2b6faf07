//! Classical dissipative ratchet map: single steps, thermal ensembles,
//! phase-space histograms and attractor classification.

mod attractor;
mod ensemble;
mod liouville;
mod map;
mod scan;

pub use attractor::{classify_attractor, AttractorReport, ClassifyOptions, ProbeOutcome};
pub use ensemble::{evolve_ensemble, sample_thermal_kicks, CurrentSeries, Ensemble};
pub use liouville::{liouville_grid, Clipping};
pub use map::{circular_distance, kick_force, kicked_map_step, map_step, thermal_map_step, ClassicalState};
pub use scan::{
    scan_parameter_space, scan_row, CellDiagnostic, CellOutcome, ScanCell, ScanCheckpoint, ScanSpec,
};
