//! Trajectory average against the density-matrix integrator on a small basis.

use serde::{Deserialize, Serialize};

use super::density::{kick_matrix, oracle_with, DensityMatrix, LindbladIntegrator, OracleOptions};
use super::dissipation::Dissipator;
use super::kick::KickOperator;
use super::trajectory::{
    column_stats, resolve_seeds, run_records, BasisSize, Engine, QuantumRunConfig, TrajectoryRecord,
};
use crate::error::{Error, Result};
use crate::params::{ModelParams, Usage};
use crate::rng::{Domain, StreamFactory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceOptions {
    /// Multiplies `g` on the trajectory side only. Anything but 1 is a
    /// deliberate mutation the check must catch.
    pub g_scale: f64,
    pub bootstrap_samples: usize,
    /// Per-trajectory bound on weight dropped by the truncated kick. Both
    /// paths apply the same truncated matrix, so this only guards against a
    /// basis far too small for the comparison to mean anything.
    pub truncation_threshold: f64,
    pub oracle: OracleOptions,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        EquivalenceOptions {
            g_scale: 1.0,
            bootstrap_samples: 200,
            truncation_threshold: 1e-2,
            oracle: OracleOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub mcwf_p: Vec<f64>,
    pub std_err: Vec<f64>,
    pub oracle_p: Vec<f64>,
    pub max_abs_dp: f64,
    /// Largest per-trajectory kick truncation loss.
    pub max_truncation_loss: f64,
    /// Total trace the oracle lost to kick truncation.
    pub oracle_truncation_loss: f64,
    /// `max_t |dp(t)| / SE(t)`; infinite when the difference is nonzero at zero SE.
    pub max_dp_over_se: f64,
    /// Population L1 distance per step.
    pub population_l1: Vec<f64>,
    /// RMS bootstrap L1 deviation of the trajectory populations per step.
    pub bootstrap_l1: Vec<f64>,
    pub mean_passed: bool,
    pub populations_passed: bool,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.mean_passed && self.populations_passed
    }
}

/// Runs both paths from the same initial mixture (the empirical trajectory
/// seeds) and compares `<p>(t)` and the momentum populations. Passes when
/// `|dp(t)| <= 3 SE(t)` and the population L1 distance is at most three
/// times the RMS bootstrap L1 deviation, at every step.
pub fn unraveling_equivalence_check(
    params: &ModelParams,
    half_width: usize,
    trajectories: usize,
    steps: usize,
    seed: u64,
    opts: &EquivalenceOptions,
) -> Result<EquivalenceReport> {
    params.validate(Usage::Quantum)?;
    if trajectories < 2 {
        return Err(Error::Config("the check needs at least two trajectories".into()));
    }
    let mut cfg = QuantumRunConfig::new(trajectories, steps, seed, BasisSize::Fixed(half_width));
    cfg.leakage_threshold = opts.truncation_threshold;
    let rng = StreamFactory::new(seed);
    let seeds = resolve_seeds(params, &cfg, &rng)?;

    let g = params.jump_amplitude()? * opts.g_scale;
    let kick = KickOperator::from_params(params, half_width);
    let u = kick_matrix(&kick);
    let engine = Engine {
        hbar: params.hbar_eff,
        kick,
        dissipator: Dissipator::with_rate(g * g, params.hbar_eff, half_width)
            .with_leakage_threshold(cfg.leakage_threshold),
    };
    let records = run_records(&engine, &seeds, &cfg, true)?;
    let (mcwf_p, std_err) = column_stats(&records, steps);
    let max_truncation_loss = records.iter().map(|r| r.leaked).fold(0.0, f64::max);

    let integrator = LindbladIntegrator::new(params, half_width, opts.oracle.dt)?;
    let rho0 = DensityMatrix::from_seeds(half_width, &seeds)?;
    let oracle = oracle_with(rho0, &integrator, &u, params.hbar_eff, steps, &opts.oracle)?;

    let mut max_abs_dp: f64 = 0.0;
    let mut max_dp_over_se: f64 = 0.0;
    for t in 0..=steps {
        let dp = (mcwf_p[t] - oracle.mean_p[t]).abs();
        max_abs_dp = max_abs_dp.max(dp);
        let ratio = if std_err[t] > 0.0 {
            dp / std_err[t]
        } else if dp > 1e-10 {
            f64::INFINITY
        } else {
            0.0
        };
        max_dp_over_se = max_dp_over_se.max(ratio);
    }

    let mean_pop = mean_populations(&records, steps, None);
    let population_l1: Vec<f64> = (0..=steps).map(|t| l1(&mean_pop[t], &oracle.populations[t])).collect();
    let bootstrap_l1 = bootstrap_population_l1(&records, &mean_pop, steps, seed, opts.bootstrap_samples);
    let populations_passed =
        population_l1.iter().zip(&bootstrap_l1).all(|(d, b)| *d <= 3.0 * b || *d < 1e-10);

    Ok(EquivalenceReport {
        mcwf_p,
        std_err,
        oracle_p: oracle.mean_p.clone(),
        max_abs_dp,
        max_truncation_loss,
        oracle_truncation_loss: oracle.kick_loss.iter().sum(),
        max_dp_over_se,
        population_l1,
        bootstrap_l1,
        mean_passed: max_dp_over_se <= 3.0,
        populations_passed,
    })
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Mean populations per step over the selected trajectories (all if `None`).
fn mean_populations(records: &[TrajectoryRecord], steps: usize, picks: Option<&[usize]>) -> Vec<Vec<f64>> {
    let dim = records[0].populations[0].len();
    let all: Vec<usize>;
    let picks = match picks {
        Some(p) => p,
        None => {
            all = (0..records.len()).collect();
            &all
        }
    };
    let inv = 1.0 / picks.len() as f64;
    (0..=steps)
        .map(|t| {
            let mut acc = vec![0.0; dim];
            for &i in picks {
                for (a, v) in acc.iter_mut().zip(&records[i].populations[t]) {
                    *a += v;
                }
            }
            acc.iter_mut().for_each(|a| *a *= inv);
            acc
        })
        .collect()
}

fn bootstrap_population_l1(
    records: &[TrajectoryRecord],
    mean_pop: &[Vec<f64>],
    steps: usize,
    seed: u64,
    samples: usize,
) -> Vec<f64> {
    let n = records.len();
    let factory = StreamFactory::new(seed);
    let mut sq = vec![0.0; steps + 1];
    let mut picks = vec![0usize; n];
    for b in 0..samples {
        let mut rng = factory.stream(Domain::Bootstrap, b as u64);
        for p in picks.iter_mut() {
            *p = rng.integer_in(0, n as i64 - 1) as usize;
        }
        let boot = mean_populations(records, steps, Some(&picks));
        for t in 0..=steps {
            let d = l1(&boot[t], &mean_pop[t]);
            sq[t] += d * d;
        }
    }
    sq.into_iter().map(|s| (s / samples.max(1) as f64).sqrt()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conservative_paths_agree_to_machine_precision() {
        let p = ModelParams::ratchet(1.0, 0.8, 0.3, 0.0);
        let opts = EquivalenceOptions { bootstrap_samples: 20, ..Default::default() };
        let r = unraveling_equivalence_check(&p, 48, 50, 10, 2, &opts).unwrap();
        assert!(r.max_abs_dp < 1e-10, "{} {:e}", r.max_abs_dp, r.oracle_truncation_loss);
        assert!(r.population_l1.iter().all(|d| *d < 1e-10));
        assert!(r.passed());
    }

    #[test]
    fn mis_scaled_rate_fails() {
        let p = ModelParams::ratchet(0.5, 0.8, 0.3, 0.0);
        let opts = EquivalenceOptions { g_scale: 1.5, bootstrap_samples: 50, ..Default::default() };
        let r = unraveling_equivalence_check(&p, 16, 400, 10, 4, &opts).unwrap();
        assert!(!r.passed());
    }
}
