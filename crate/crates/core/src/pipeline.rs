//! End-to-end runs that feed currents, grids and overlaps to the runner.

use serde::{Deserialize, Serialize};

use crate::classical::{evolve_ensemble, liouville_grid, Clipping, CurrentSeries, Ensemble};
use crate::error::Result;
use crate::params::{GridSpec, ModelParams};
use crate::phase_space::{
    comparison_report, husimi_grid, overlap_measure, CoherentFrame, ComparisonReport, OverlapMode,
    PhaseSpaceGrid, RunSide,
};
use crate::quantum::{run_trajectory_ensemble, BasisSize, QuantumRunConfig, TrajectoryStats};
use crate::rng::StreamFactory;

#[derive(Debug, Clone)]
pub struct ClassicalRun {
    pub series: CurrentSeries,
    /// Liouville grid of the final ensemble. Particles outside the momentum
    /// window are dropped and counted in `meta.overflow`.
    pub grid: Option<PhaseSpaceGrid>,
}

pub fn classical_run(
    params: &ModelParams,
    size: usize,
    steps: usize,
    seed: u64,
    grid: Option<GridSpec>,
) -> Result<ClassicalRun> {
    let rng = StreamFactory::new(seed);
    let (ensemble, series) = evolve_ensemble(Ensemble::uniform(size, &rng), params, steps, &rng)?;
    let grid = match grid {
        Some(spec) => {
            let mut g = liouville_grid(&ensemble, spec, Clipping::Allow)?;
            g.meta.params = Some(*params);
            g.meta.step = Some(steps);
            Some(g)
        }
        None => None,
    };
    Ok(ClassicalRun { series, grid })
}

#[derive(Debug, Clone)]
pub struct QuantumRun {
    pub stats: TrajectoryStats,
    /// Husimi function of the final-step snapshots, when requested.
    pub husimi: Option<PhaseSpaceGrid>,
}

/// Quantum run with the basis sized to the grid's momentum window.
pub fn quantum_run(
    params: &ModelParams,
    trajectories: usize,
    steps: usize,
    seed: u64,
    spec: GridSpec,
    husimi: bool,
) -> Result<QuantumRun> {
    spec.validate()?;
    let p_max = spec.p_max.abs().max(spec.p_min.abs());
    let mut cfg = QuantumRunConfig::new(trajectories, steps, seed, BasisSize::Auto { p_max });
    if husimi {
        cfg = cfg.with_snapshots(vec![steps]);
    }
    let mut stats = run_trajectory_ensemble(params, &cfg)?;
    let grid = if husimi {
        let snap = stats.snapshots.pop().expect("final snapshot was requested");
        let mut g = husimi_grid(&snap.states, spec, &CoherentFrame::new(params.hbar_eff)?)?;
        g.meta.params = Some(*params);
        g.meta.step = Some(steps);
        Some(g)
    } else {
        None
    };
    Ok(QuantumRun { stats, husimi: grid })
}

/// One overlap between a classical Liouville grid and a quantum Husimi grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapEntry {
    pub label: String,
    pub temperature: f64,
    pub overlap: f64,
    pub overlap_raw: f64,
    pub classical_current: f64,
    pub quantum_current: f64,
    /// Classical particles outside the grid's momentum window.
    pub overflow: usize,
}

pub fn overlap_entry(
    label: &str,
    classical: &ClassicalRun,
    quantum: &QuantumRun,
    temperature: f64,
) -> Result<OverlapEntry> {
    let l = classical.grid.as_ref().expect("classical grid");
    let h = quantum.husimi.as_ref().expect("quantum Husimi grid");
    Ok(OverlapEntry {
        label: label.to_string(),
        temperature,
        overlap: overlap_measure(l, h, OverlapMode::Normalized)?,
        overlap_raw: overlap_measure(l, h, OverlapMode::Raw)?,
        classical_current: classical.series.last().unwrap_or(f64::NAN),
        quantum_current: quantum.stats.mean_p.last().copied().unwrap_or(f64::NAN),
        overflow: l.meta.overflow,
    })
}

/// Compares the quantum steady states of two parameter sets on one grid.
pub fn quantum_comparison(
    first: (&str, &QuantumRun),
    second: (&str, &QuantumRun),
    threshold: f64,
) -> Result<ComparisonReport> {
    let side = |(label, run): (&str, &QuantumRun)| RunSide {
        label: label.to_string(),
        grid: run.husimi.clone().expect("quantum Husimi grid"),
        current: run.stats.mean_p.clone(),
    };
    comparison_report(&side(first), &side(second), threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_overlap_is_consistent() {
        let p = ModelParams::ratchet(0.3, 1.5, 0.2, 0.0);
        let spec = GridSpec::symmetric(32, 6.0);
        let c = classical_run(&p, 2000, 5, 1, Some(spec)).unwrap();
        let q = quantum_run(&p, 20, 5, 1, spec, true).unwrap();
        let e = overlap_entry("small", &c, &q, 0.0).unwrap();
        assert!(e.overlap > 0.0 && e.overlap <= 1.0);
        assert_eq!(c.grid.as_ref().unwrap().meta.step, Some(5));
        assert_eq!(q.husimi.as_ref().unwrap().meta.params, Some(p));
        let r = quantum_comparison(("a", &q), ("b", &q), 0.9).unwrap();
        assert!((r.overlap - 1.0).abs() < 1e-12);
        assert!(r.similar);
    }
}
