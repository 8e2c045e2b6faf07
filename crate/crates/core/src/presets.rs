//! Registered parameter sets and figure recipes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{GridSpec, ModelParams};

/// Effective Planck constant of the main comparison runs.
pub const HBAR_DEFAULT: f64 = 0.082;
/// Coarser and finer `hbar_eff` used for the B1 and D-1 Husimi panels.
pub const HBAR_COARSE: f64 = 0.246;
pub const HBAR_FINE: f64 = 0.027;

/// Default side length of phase-space grids.
pub const GRID_BINS: usize = 256;

/// A named point of the `(gamma, K)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub gamma: f64,
    pub big_k: f64,
    /// Finite temperature paired with the structure, if any.
    pub temperature: Option<f64>,
    /// Symmetric momentum window `[-p_abs, p_abs]` for its grids.
    pub p_abs: f64,
    /// Expected asymptotic current in units of `2 pi` (`None` when chaotic).
    pub winding: Option<i64>,
}

pub const PRESETS: [Preset; 4] = [
    Preset { name: "B1", gamma: 0.2, big_k: 8.2, temperature: Some(0.058), p_abs: 20.0, winding: Some(1) },
    Preset { name: "C-1", gamma: 0.64, big_k: 5.6, temperature: Some(0.12), p_abs: 20.0, winding: Some(-1) },
    Preset { name: "D-1", gamma: 0.29, big_k: 11.9, temperature: Some(0.07), p_abs: 30.0, winding: Some(-1) },
    Preset { name: "A", gamma: 0.26, big_k: 11.9, temperature: None, p_abs: 30.0, winding: None },
];

fn canonical(name: &str) -> String {
    name.trim().to_ascii_lowercase().replace(['_', ' '], "").replace("m1", "-1")
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}

/// Looks a preset up case-insensitively (`c-1`, `C_-1` and `Cm1` all match).
pub fn preset(name: &str) -> Result<&'static Preset> {
    let key = canonical(name);
    PRESETS.iter().find(|p| canonical(p.name) == key).ok_or_else(|| {
        Error::Config(format!("unknown preset '{name}'; registered presets: {}", preset_names().join(", ")))
    })
}

impl Preset {
    /// Parameters at `T = 0` with the default second harmonic.
    pub fn params(&self, hbar_eff: f64) -> ModelParams {
        ModelParams::ratchet(self.gamma, self.big_k, hbar_eff, 0.0)
    }

    pub fn thermal_params(&self, hbar_eff: f64) -> Option<ModelParams> {
        self.temperature.map(|t| self.params(hbar_eff).with_temperature(t))
    }

    pub fn grid(&self, bins: usize) -> GridSpec {
        GridSpec::symmetric(bins, self.p_abs)
    }

    /// `2 pi M`, the current of the periodic attractor.
    pub fn target_current(&self) -> Option<f64> {
        self.winding.map(|m| 2.0 * std::f64::consts::PI * m as f64)
    }
}

/// Figure-level recipes reproduced by the runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Figure {
    /// Liouville and Husimi grids of B1, C-1 and D-1 at `hbar = 0.082`.
    Fig1,
    /// B1 Husimi at the coarse `hbar`, D-1 at the fine one, and the A pair.
    Fig2,
    /// Classical (T = 0 and finite T) and quantum currents of B1 and C-1.
    Fig3,
    /// The same for D-1 plus the chaotic A currents.
    Fig4,
    /// All eight overlap values.
    OverlapTable,
}

pub const FIGURES: [Figure; 5] =
    [Figure::Fig1, Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::OverlapTable];

impl Figure {
    pub fn name(&self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::OverlapTable => "overlap-table",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        FIGURES.iter().copied().find(|f| f.name() == key).ok_or_else(|| {
            let names: Vec<&str> = FIGURES.iter().map(|f| f.name()).collect();
            Error::Config(format!("unknown figure '{s}'; registered: {}", names.join(", ")))
        })
    }
}
