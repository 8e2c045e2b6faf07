//! Classical and quantum simulation of a dissipative kicked ratchet.
//!
//! The classical engine iterates the dissipative standard-like map with an
//! asymmetric two-harmonic kick, optionally with thermal noise. The quantum
//! engine evolves the Lindblad-quantized map with Monte-Carlo wave-function
//! trajectories and keeps a dense density-matrix integrator as a reference.
//! Phase-space analysis turns both into comparable grids and overlaps.

pub mod classical;
pub mod error;
pub mod io;
pub mod params;
pub mod phase_space;
pub mod pipeline;
pub mod presets;
pub mod quantum;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use params::{
    derive_quantities, validate_params, DerivedQuantities, GridSpec, ModelParams, RunConfig, Usage,
    ValidationResult, Violation,
};
