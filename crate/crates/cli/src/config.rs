//! Experiment documents and flag overrides.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use clap::Args;
use qratchet_core::classical::ScanSpec;
use qratchet_core::presets::{preset, Preset, HBAR_DEFAULT};
use qratchet_core::{GridSpec, ModelParams, RunConfig};
use serde::{Deserialize, Serialize};

/// One JSON document describing a run. Every field is optional; flags
/// override whatever the document sets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ModelParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunConfig>,
    /// Fixed quantum basis half-width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_steps: Option<Vec<usize>>,
    /// Second preset of a `compare` run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare_with: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
}

impl ExperimentConfig {
    /// Reads an experiment document, or the `config` section of a manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let doc = match value.get("config") {
            Some(inner) if value.get("outputs").is_some() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(doc).with_context(|| format!("invalid experiment config {}", path.display()))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Dissipation parameter gamma.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Classical kick strength K.
    #[arg(long = "kick", visible_alias = "big-k")]
    pub big_k: Option<f64>,
    /// Second-harmonic amplitude.
    #[arg(long)]
    pub a: Option<f64>,
    /// Second-harmonic phase in radians.
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Use the preset's finite temperature.
    #[arg(long, conflicts_with = "temperature")]
    pub thermal: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub steps: Option<usize>,
    /// Classical ensemble size.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Grid bins along each axis.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Symmetric momentum window `[-p, p]` of grids.
    #[arg(long = "p-max")]
    pub p_max: Option<f64>,
}

/// A fully resolved run description.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub preset: Option<&'static Preset>,
    pub params: ModelParams,
    pub run: RunConfig,
}

pub struct Defaults {
    pub size: usize,
}

impl Default for Defaults {
    fn default() -> Self {
        Defaults { size: RunConfig::default().ensemble_size }
    }
}

pub fn resolve(
    mut config: ExperimentConfig,
    preset_flag: Option<&str>,
    seed: Option<u64>,
    model: &ModelArgs,
    run: &RunArgs,
    defaults: &Defaults,
) -> Result<Resolved> {
    if let Some(p) = preset_flag {
        config.preset = Some(p.to_string());
    }
    let preset = config.preset.as_deref().map(preset).transpose()?;
    if let Some(p) = preset {
        config.preset = Some(p.name.to_string());
    }

    let mut params = match (config.params, preset) {
        (Some(p), _) => p,
        (None, Some(p)) => p.params(HBAR_DEFAULT),
        (None, None) => match (model.gamma, model.big_k) {
            (Some(g), Some(k)) => ModelParams::ratchet(g, k, HBAR_DEFAULT, 0.0),
            _ => {
                return Err(anyhow!(qratchet_core::Error::Config(
                    "give --preset, a params section in --config, or both --gamma and --kick".into()
                )))
            }
        },
    };
    if let Some(v) = model.gamma {
        params.gamma = v;
    }
    if let Some(v) = model.big_k {
        params.big_k = v;
    }
    if let Some(v) = model.a {
        params.a = v;
    }
    if let Some(v) = model.phi {
        params.phi = v;
    }
    if let Some(v) = model.hbar {
        params.hbar_eff = v;
    }
    if let Some(v) = model.temperature {
        params.temperature = v;
    }
    if model.thermal {
        let t = preset.and_then(|p| p.temperature).ok_or_else(|| {
            anyhow!(qratchet_core::Error::Config("--thermal needs a preset with a finite temperature".into()))
        })?;
        params.temperature = t;
    }

    let mut rc = match config.run.clone() {
        Some(rc) => rc,
        None => {
            let p_abs = preset.map_or(20.0, |p| p.p_abs);
            RunConfig {
                ensemble_size: defaults.size,
                grid: GridSpec::symmetric(RunConfig::default().grid.x_bins, p_abs),
                ..RunConfig::default()
            }
        }
    };
    if let Some(v) = run.steps {
        rc.steps = v;
    }
    if let Some(v) = run.size {
        rc.ensemble_size = v;
    }
    if let Some(v) = run.trajectories {
        rc.trajectories = v;
    }
    if let Some(v) = run.bins {
        rc.grid.x_bins = v;
        rc.grid.p_bins = v;
    }
    if let Some(v) = run.p_max {
        rc.grid.p_min = -v;
        rc.grid.p_max = v;
    }
    if let Some(v) = seed {
        rc.seed = v;
    }
    rc.validate()?;

    config.params = Some(params);
    config.run = Some(rc.clone());
    Ok(Resolved { config, preset, params, run: rc })
}
