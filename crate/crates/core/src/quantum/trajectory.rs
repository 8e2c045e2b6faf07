use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dissipation::{DissipationScratch, Dissipator, LEAKAGE_THRESHOLD};
use super::kick::{KickOperator, KickScratch};
use super::state::{make_initial_mixture, MomentumState, TrajectorySeed};
use crate::error::{Error, Result};
use crate::params::{ModelParams, Usage};
use crate::rng::{Domain, StreamFactory};
use crate::stats::pairwise_sum;

/// Extra basis states beyond `ceil(p_max / hbar_eff)`.
pub const BASIS_MARGIN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSize {
    /// `N = ceil(p_max / hbar_eff) + BASIS_MARGIN`.
    Auto {
        p_max: f64,
    },
    Fixed(usize),
}

impl BasisSize {
    pub fn half_width(&self, hbar_eff: f64) -> usize {
        match *self {
            BasisSize::Auto { p_max } => (p_max.abs() / hbar_eff).ceil() as usize + BASIS_MARGIN,
            BasisSize::Fixed(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// Uniform mixture of eigenstates `|n0>`, `|n0| <= floor(pi / hbar_eff)`.
    Mixture,
    /// Every trajectory starts in `|n0>`.
    Eigenstate(i64),
    /// Explicit per-trajectory seeds.
    Seeds(Vec<TrajectorySeed>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumRunConfig {
    pub trajectories: usize,
    pub steps: usize,
    pub seed: u64,
    pub basis: BasisSize,
    pub initial: InitialCondition,
    /// Steps (0 = initial state) at which every trajectory's state is kept.
    /// Snapshots include the free drift that follows the kick, so positions
    /// line up with the classical map's `(x_t, p_t)`.
    #[serde(default)]
    pub snapshot_steps: Vec<usize>,
    #[serde(default = "default_leakage")]
    pub leakage_threshold: f64,
}

fn default_leakage() -> f64 {
    LEAKAGE_THRESHOLD
}

impl QuantumRunConfig {
    pub fn new(trajectories: usize, steps: usize, seed: u64, basis: BasisSize) -> Self {
        QuantumRunConfig {
            trajectories,
            steps,
            seed,
            basis,
            initial: InitialCondition::Mixture,
            snapshot_steps: Vec::new(),
            leakage_threshold: LEAKAGE_THRESHOLD,
        }
    }

    pub fn with_initial(mut self, initial: InitialCondition) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_snapshots(mut self, steps: Vec<usize>) -> Self {
        self.snapshot_steps = steps;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub states: Vec<MomentumState>,
}

/// Trajectory-averaged observables of a quantum run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub hbar_eff: f64,
    pub half_width: usize,
    pub trajectories: usize,
    /// `<p> = hbar_eff <n>` for `t = 0..=steps`.
    pub mean_p: Vec<f64>,
    pub std_err: Vec<f64>,
    pub mean_jumps_per_step: f64,
    pub max_leakage: f64,
    pub snapshots: Vec<Snapshot>,
}

impl TrajectoryStats {
    pub fn snapshot(&self, step: usize) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.step == step)
    }
}

/// Full record of one trajectory.
#[derive(Debug, Clone)]
pub(crate) struct TrajectoryRecord {
    pub p: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
    pub snapshots: Vec<MomentumState>,
    pub jumps: usize,
    pub leaked: f64,
}

/// Prepared operators for a run.
pub(crate) struct Engine {
    pub hbar: f64,
    pub kick: KickOperator,
    pub dissipator: Dissipator,
}

impl Engine {
    pub fn new(params: &ModelParams, half_width: usize, leakage_threshold: f64) -> Result<Self> {
        Ok(Engine {
            hbar: params.hbar_eff,
            kick: KickOperator::from_params(params, half_width),
            dissipator: Dissipator::new(params, half_width)?.with_leakage_threshold(leakage_threshold),
        })
    }

    pub fn run_one(
        &self,
        seed: TrajectorySeed,
        cfg: &QuantumRunConfig,
        rng: &StreamFactory,
        keep_populations: bool,
        scratch: &mut (KickScratch, DissipationScratch),
    ) -> Result<TrajectoryRecord> {
        let nh = self.kick.half_width();
        let mut s = MomentumState::eigenstate(nh, seed.n0)?;
        let mut stream = rng.stream(Domain::QuantumJumps, seed.index as u64);
        let mut rec = TrajectoryRecord {
            p: Vec::with_capacity(cfg.steps + 1),
            populations: Vec::new(),
            snapshots: Vec::new(),
            jumps: 0,
            leaked: 0.0,
        };
        let observe = |s: &MomentumState, t: usize, rec: &mut TrajectoryRecord| {
            rec.p.push(self.hbar * s.mean_n());
            if keep_populations {
                rec.populations.push(s.populations());
            }
            if cfg.snapshot_steps.contains(&t) {
                let mut snap = s.clone();
                self.dissipator.free_rotation().apply(&mut snap);
                rec.snapshots.push(snap);
            }
        };
        observe(&s, 0, &mut rec);
        for t in 1..=cfg.steps {
            rec.jumps += self.dissipator.interval(&mut s, &mut stream, &mut scratch.1)?;
            let out = self.kick.apply(&mut s, &mut scratch.0)?;
            rec.leaked += out.leaked;
            if rec.leaked > cfg.leakage_threshold {
                return Err(Error::Leakage {
                    leakage: rec.leaked,
                    threshold: cfg.leakage_threshold,
                    half_width: nh,
                });
            }
            observe(&s, t, &mut rec);
        }
        Ok(rec)
    }
}

pub(crate) fn resolve_seeds(
    params: &ModelParams,
    cfg: &QuantumRunConfig,
    rng: &StreamFactory,
) -> Result<Vec<TrajectorySeed>> {
    match &cfg.initial {
        InitialCondition::Mixture => make_initial_mixture(params, cfg.trajectories, rng),
        InitialCondition::Eigenstate(n0) => {
            Ok((0..cfg.trajectories).map(|index| TrajectorySeed { index, n0: *n0 }).collect())
        }
        InitialCondition::Seeds(seeds) => Ok(seeds.clone()),
    }
}

pub(crate) fn run_records(
    engine: &Engine,
    seeds: &[TrajectorySeed],
    cfg: &QuantumRunConfig,
    keep_populations: bool,
) -> Result<Vec<TrajectoryRecord>> {
    let rng = StreamFactory::new(cfg.seed);
    seeds
        .par_iter()
        .map_init(
            || (KickScratch::default(), DissipationScratch::default()),
            |scratch, seed| {
                engine
                    .run_one(*seed, cfg, &rng, keep_populations, scratch)
                    .map_err(|e| Error::Trajectory { index: seed.index, source: Box::new(e) })
            },
        )
        .collect()
}

/// Runs independent jump trajectories of the kicked dissipative map: each
/// period applies one dissipative interval and then the kick, and `<p>` is
/// read after the kick. Averages are reduced in trajectory-index order, so
/// results do not depend on threads.
pub fn run_trajectory_ensemble(params: &ModelParams, cfg: &QuantumRunConfig) -> Result<TrajectoryStats> {
    params.validate(Usage::Quantum)?;
    if cfg.trajectories == 0 {
        return Err(Error::Config("at least one trajectory is required".into()));
    }
    let half_width = cfg.basis.half_width(params.hbar_eff);
    let engine = Engine::new(params, half_width, cfg.leakage_threshold)?;
    let seeds = resolve_seeds(params, cfg, &StreamFactory::new(cfg.seed))?;
    let records = run_records(&engine, &seeds, cfg, false)?;
    Ok(summarize(params.hbar_eff, half_width, cfg, records))
}

fn summarize(
    hbar_eff: f64,
    half_width: usize,
    cfg: &QuantumRunConfig,
    records: Vec<TrajectoryRecord>,
) -> TrajectoryStats {
    let n = records.len();
    let (mean_p, std_err) = column_stats(&records, cfg.steps);
    let jumps: Vec<f64> = records.iter().map(|r| r.jumps as f64).collect();
    let max_leakage = records.iter().map(|r| r.leaked).fold(0.0, f64::max);
    let mut snapshots: Vec<Snapshot> =
        cfg.snapshot_steps.iter().map(|&step| Snapshot { step, states: Vec::with_capacity(n) }).collect();
    for rec in records {
        for (snap, state) in snapshots.iter_mut().zip(rec.snapshots) {
            snap.states.push(state);
        }
    }
    snapshots.retain(|s| s.step <= cfg.steps);
    TrajectoryStats {
        hbar_eff,
        half_width,
        trajectories: n,
        mean_p,
        std_err,
        mean_jumps_per_step: pairwise_sum(&jumps) / (n * cfg.steps.max(1)) as f64,
        max_leakage,
        snapshots,
    }
}

pub(crate) fn column_stats(records: &[TrajectoryRecord], steps: usize) -> (Vec<f64>, Vec<f64>) {
    let n = records.len() as f64;
    let mut mean = Vec::with_capacity(steps + 1);
    let mut se = Vec::with_capacity(steps + 1);
    let mut col = Vec::with_capacity(records.len());
    for t in 0..=steps {
        col.clear();
        col.extend(records.iter().map(|r| r.p[t]));
        let m = pairwise_sum(&col) / n;
        for v in col.iter_mut() {
            *v = (*v - m) * (*v - m);
        }
        let var = if n > 1.0 { pairwise_sum(&col) / (n - 1.0) } else { 0.0 };
        mean.push(m);
        se.push((var / n).sqrt());
    }
    (mean, se)
}
