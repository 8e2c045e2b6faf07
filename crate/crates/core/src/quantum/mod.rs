//! Quantum jump engine for the dissipative kicked rotor.

mod density;
mod dissipation;
mod equivalence;
mod kick;
mod state;
mod trajectory;

pub use density::{
    dm_lindblad_oracle, DensityMatrix, LindbladIntegrator, OracleOptions, OracleRun, MAX_ORACLE_DT,
    TRACE_DRIFT_LIMIT,
};
pub use dissipation::{
    Channel, DiagonalPropagator, DissipationScratch, Dissipator, JUMP_TIME_TOLERANCE, LEAKAGE_THRESHOLD,
};
pub use equivalence::{unraveling_equivalence_check, EquivalenceOptions, EquivalenceReport};
pub use kick::{KickOperator, KickOutcome, KickScratch, KICK_NORM_TOLERANCE};
pub use state::{initial_momentum_bound, make_initial_mixture, MomentumState, TrajectorySeed};
pub use trajectory::{
    run_trajectory_ensemble, BasisSize, InitialCondition, QuantumRunConfig, Snapshot, TrajectoryStats,
    BASIS_MARGIN,
};
