//! Model parameters, validation and derived physical quantities.
//!
//! The classical map depends on the kick strength only through
//! `K = k * hbar_eff`, with rescaled momentum `p = hbar_eff * n`. The quantum
//! kick uses the bare strength `k = K / hbar_eff`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical knobs of the dissipative kicked ratchet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Dissipation: 0 is overdamped, 1 is conservative.
    pub gamma: f64,
    /// Classical kick strength `K = k * hbar_eff`.
    #[serde(rename = "bigK")]
    pub big_k: f64,
    /// Second-harmonic amplitude.
    pub a: f64,
    /// Second-harmonic phase (radians).
    pub phi: f64,
    /// Effective Planck constant, equal to the kick period.
    pub hbar_eff: f64,
    /// Bath temperature with `k_B = 1`.
    pub temperature: f64,
}

/// Which engine will consume the parameters. Quantum use adds constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Usage {
    Classical,
    Quantum,
}

/// A single violated parameter invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum Violation {
    NonFinite {
        field: String,
    },
    GammaOutOfRange {
        value: f64,
    },
    NegativeKick {
        value: f64,
    },
    NonPositiveHbar {
        value: f64,
    },
    NegativeTemperature {
        value: f64,
    },
    /// `gamma = 0` with a quantum run: `g = sqrt(-ln gamma)` diverges.
    SingularDissipation,
    EmptyEnsemble,
    EmptyGrid {
        x_bins: usize,
        p_bins: usize,
    },
    InvertedMomentumRange {
        p_min: f64,
        p_max: f64,
    },
    NoTrajectories,
}

impl Violation {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::NonFinite { .. } => "non_finite",
            Violation::GammaOutOfRange { .. } => "gamma_out_of_range",
            Violation::NegativeKick { .. } => "negative_kick",
            Violation::NonPositiveHbar { .. } => "non_positive_hbar",
            Violation::NegativeTemperature { .. } => "negative_temperature",
            Violation::SingularDissipation => "singular_dissipation",
            Violation::EmptyEnsemble => "empty_ensemble",
            Violation::EmptyGrid { .. } => "empty_grid",
            Violation::InvertedMomentumRange { .. } => "inverted_momentum_range",
            Violation::NoTrajectories => "no_trajectories",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite { field } => write!(f, "{field} is not finite"),
            Violation::GammaOutOfRange { value } => {
                write!(f, "gamma = {value} outside [0, 1]")
            }
            Violation::NegativeKick { value } => write!(f, "bigK = {value} is negative"),
            Violation::NonPositiveHbar { value } => {
                write!(f, "hbar_eff = {value} must be positive for quantum use")
            }
            Violation::NegativeTemperature { value } => {
                write!(f, "temperature = {value} is negative")
            }
            Violation::SingularDissipation => {
                write!(f, "gamma = 0 leaves g = sqrt(-ln gamma) undefined")
            }
            Violation::EmptyEnsemble => write!(f, "ensemble_size must be at least 1"),
            Violation::EmptyGrid { x_bins, p_bins } => {
                write!(f, "grid {x_bins}x{p_bins} has an empty axis")
            }
            Violation::InvertedMomentumRange { p_min, p_max } => {
                write!(f, "p_min = {p_min} is not below p_max = {p_max}")
            }
            Violation::NoTrajectories => write!(f, "trajectories must be at least 1"),
        }
    }
}

/// Outcome of [`validate_params`]: every violated invariant, not just the first.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationResult {
    pub violations: Vec<Violation>,
}

impl ValidationResult {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(self.violations))
        }
    }
}

pub fn validate_params(params: &ModelParams, usage: Usage) -> ValidationResult {
    let mut violations = Vec::new();
    let fields = [
        ("gamma", params.gamma),
        ("bigK", params.big_k),
        ("a", params.a),
        ("phi", params.phi),
        ("hbar_eff", params.hbar_eff),
        ("temperature", params.temperature),
    ];
    for (name, value) in fields {
        if !value.is_finite() {
            violations.push(Violation::NonFinite { field: name.into() });
        }
    }
    if params.gamma.is_finite() && !(0.0..=1.0).contains(&params.gamma) {
        violations.push(Violation::GammaOutOfRange { value: params.gamma });
    }
    if params.big_k < 0.0 {
        violations.push(Violation::NegativeKick { value: params.big_k });
    }
    if params.temperature < 0.0 {
        violations.push(Violation::NegativeTemperature { value: params.temperature });
    }
    if usage == Usage::Quantum {
        if params.hbar_eff.is_finite() && params.hbar_eff <= 0.0 {
            violations.push(Violation::NonPositiveHbar { value: params.hbar_eff });
        }
        if params.gamma == 0.0 {
            violations.push(Violation::SingularDissipation);
        }
    }
    ValidationResult { violations }
}

impl ModelParams {
    /// Ratchet parameters with the second harmonic at its usual
    /// symmetry-breaking defaults `a = 0.5`, `phi = pi/2`.
    pub fn ratchet(gamma: f64, big_k: f64, hbar_eff: f64, temperature: f64) -> Self {
        ModelParams { gamma, big_k, a: DEFAULT_A, phi: DEFAULT_PHI, hbar_eff, temperature }
    }

    pub fn with_temperature(self, temperature: f64) -> Self {
        ModelParams { temperature, ..self }
    }

    pub fn validate(&self, usage: Usage) -> Result<()> {
        validate_params(self, usage).into_result()
    }

    /// `a != 0` and `phi` not a multiple of pi.
    pub fn breaks_spatial_symmetry(&self) -> bool {
        let m = (self.phi / PI).round();
        self.a != 0.0 && (self.phi - m * PI).abs() > 1e-12
    }

    pub fn breaks_temporal_symmetry(&self) -> bool {
        self.gamma != 1.0
    }

    /// Jump amplitude `g = sqrt(-ln gamma)`; zero at `gamma = 1`.
    pub fn jump_amplitude(&self) -> Result<f64> {
        if self.gamma <= 0.0 {
            return Err(Error::Singular);
        }
        Ok((-self.gamma.ln()).max(0.0).sqrt())
    }

    /// Standard deviation of the thermal momentum kick, `sqrt(2 (1 - gamma) T)`.
    pub fn noise_sigma(&self) -> f64 {
        (2.0 * (1.0 - self.gamma) * self.temperature).max(0.0).sqrt()
    }

    /// Temperature giving momentum fluctuations of variance `hbar_eff`.
    pub fn hbar_temperature(&self) -> f64 {
        self.hbar_eff / (2.0 * (1.0 - self.gamma))
    }
}

pub const DEFAULT_A: f64 = 0.5;
pub const DEFAULT_PHI: f64 = PI / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedQuantities {
    /// `sqrt(-ln gamma)`; infinite at `gamma = 0` (classical use only).
    pub g: f64,
    /// `K / hbar_eff`.
    pub k_quantum: f64,
    pub noise_sigma: f64,
    /// Smallest `N` with `N * hbar_eff >= p_max`.
    pub basis_halfwidth: usize,
}

pub fn derive_quantities(params: &ModelParams, p_max: f64, usage: Usage) -> Result<DerivedQuantities> {
    params.validate(usage)?;
    let g = if params.gamma == 0.0 { f64::INFINITY } else { params.jump_amplitude()? };
    let (k_quantum, basis_halfwidth) = if params.hbar_eff > 0.0 {
        (params.big_k / params.hbar_eff, (p_max.abs() / params.hbar_eff).ceil() as usize)
    } else {
        (f64::NAN, 0)
    };
    Ok(DerivedQuantities { g, k_quantum, noise_sigma: params.noise_sigma(), basis_halfwidth })
}

/// Phase-space discretization shared by Liouville and Husimi grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_bins: usize,
    pub p_bins: usize,
    pub p_min: f64,
    pub p_max: f64,
}

impl GridSpec {
    pub fn new(x_bins: usize, p_bins: usize, p_min: f64, p_max: f64) -> Self {
        GridSpec { x_bins, p_bins, p_min, p_max }
    }

    /// Square grid over a symmetric momentum window `[-p_abs, p_abs]`.
    pub fn symmetric(bins: usize, p_abs: f64) -> Self {
        GridSpec::new(bins, bins, -p_abs, p_abs)
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.x_bins == 0 || self.p_bins == 0 {
            v.push(Violation::EmptyGrid { x_bins: self.x_bins, p_bins: self.p_bins });
        }
        if !self.p_min.is_finite() || !self.p_max.is_finite() || self.p_min >= self.p_max {
            v.push(Violation::InvertedMomentumRange { p_min: self.p_min, p_max: self.p_max });
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        ValidationResult { violations: self.violations() }.into_result()
    }

    pub fn cells(&self) -> usize {
        self.x_bins * self.p_bins
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.x_bins as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.p_bins as f64
    }

    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }

    pub fn p_center(&self, j: usize) -> f64 {
        self.p_min + (j as f64 + 0.5) * self.dp()
    }

    /// Cell index of a wrapped position in `[0, 2pi)`.
    pub fn x_index(&self, x: f64) -> usize {
        ((x / self.dx()) as usize).min(self.x_bins - 1)
    }

    /// Cell index of a momentum, `None` outside `[p_min, p_max]`.
    pub fn p_index(&self, p: f64) -> Option<usize> {
        if !(self.p_min..=self.p_max).contains(&p) {
            return None;
        }
        Some((((p - self.p_min) / self.dp()) as usize).min(self.p_bins - 1))
    }
}

/// Run-level knobs shared by the engines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ensemble_size: usize,
    pub steps: usize,
    pub seed: u64,
    pub grid: GridSpec,
    pub trajectories: usize,
    /// Advisory thread count; results never depend on it.
    #[serde(default)]
    pub worker_hint: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ensemble_size: 10_000,
            steps: 50,
            seed: 0,
            grid: GridSpec::symmetric(256, 20.0),
            trajectories: 500,
            worker_hint: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let mut violations = self.grid.violations();
        if self.ensemble_size == 0 {
            violations.push(Violation::EmptyEnsemble);
        }
        if self.trajectories == 0 {
            violations.push(Violation::NoTrajectories);
        }
        ValidationResult { violations }.into_result()
    }
}
