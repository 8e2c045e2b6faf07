use thiserror::Error;

use crate::params::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("dissipation singularity: gamma = 0 makes g = sqrt(-ln gamma) diverge")]
    Singular,

    #[error("no attractor at gamma = 1 (conservative dynamics)")]
    Conservative,

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("all {0} particles fall outside the grid momentum range")]
    AllOutOfRange(usize),

    #[error("grids are not comparable: {0}")]
    IncomparableGrids(String),

    #[error("basis leakage {leakage:.3e} exceeds {threshold:.1e} at n = ±{half_width}; increase the basis half-width")]
    Leakage { leakage: f64, threshold: f64, half_width: usize },

    #[error("kick changed the norm by {0:.3e}; position grid too coarse")]
    NormDrift(f64),

    #[error("density matrix trace drifted by {0:.3e}; reduce the integration step")]
    TraceDrift(f64),

    #[error("trajectory {index} failed")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("snapshot mismatch: {0}")]
    SnapshotMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error reports a failed numerical consistency check
    /// (basis leakage, norm or trace drift) rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Leakage { .. } | Error::NormDrift(_) | Error::TraceDrift(_) => true,
            Error::Trajectory { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::Singular
                | Error::Conservative
                | Error::EmptyEnsemble
                | Error::Config(_)
        )
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
