use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qratchet_core::classical::{evolve_ensemble, liouville_grid, Clipping, Ensemble};
use qratchet_core::phase_space::{husimi_grid, overlap_measure, CoherentFrame, OverlapMode};
use qratchet_core::presets::{preset, HBAR_DEFAULT};
use qratchet_core::quantum::{
    run_trajectory_ensemble, BasisSize, KickOperator, KickScratch, MomentumState, QuantumRunConfig,
};
use qratchet_core::rng::StreamFactory;

fn classical(c: &mut Criterion) {
    let params = preset("B1").unwrap().thermal_params(HBAR_DEFAULT).unwrap();
    let rng = StreamFactory::new(1);
    let mut g = c.benchmark_group("classical_ensemble");
    g.sample_size(10);
    for size in [10_000usize, 100_000] {
        g.bench_with_input(BenchmarkId::from_parameter(size), &size, |b, &size| {
            b.iter(|| evolve_ensemble(Ensemble::uniform(size, &rng), &params, 20, &rng).unwrap())
        });
    }
    g.finish();
}

fn kick(c: &mut Criterion) {
    let params = preset("D-1").unwrap().params(HBAR_DEFAULT);
    let mut g = c.benchmark_group("kick");
    for nh in [256usize, 1024] {
        let op = KickOperator::from_params(&params, nh);
        let mut scratch = KickScratch::default();
        let mut s = MomentumState::eigenstate(nh, 0).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(nh), &nh, |b, _| {
            b.iter(|| op.apply_unchecked(black_box(&mut s), &mut scratch))
        });
    }
    g.finish();
}

fn trajectories(c: &mut Criterion) {
    let p = preset("B1").unwrap();
    let params = p.params(HBAR_DEFAULT);
    let cfg = QuantumRunConfig::new(16, 10, 1, BasisSize::Auto { p_max: p.p_abs });
    let mut g = c.benchmark_group("quantum_trajectories");
    g.sample_size(10);
    g.bench_function("B1_16x10", |b| b.iter(|| run_trajectory_ensemble(&params, &cfg).unwrap()));
    g.finish();
}

fn phase_space(c: &mut Criterion) {
    let p = preset("C-1").unwrap();
    let params = p.params(HBAR_DEFAULT);
    let spec = p.grid(128);
    let cfg = QuantumRunConfig::new(8, 5, 2, BasisSize::Auto { p_max: p.p_abs }).with_snapshots(vec![5]);
    let stats = run_trajectory_ensemble(&params, &cfg).unwrap();
    let states = &stats.snapshots[0].states;
    let frame = CoherentFrame::new(params.hbar_eff).unwrap();
    let rng = StreamFactory::new(3);
    let ensemble = Ensemble::uniform(100_000, &rng);

    let mut g = c.benchmark_group("phase_space");
    g.sample_size(10);
    g.bench_function("husimi_8_states_128", |b| b.iter(|| husimi_grid(states, spec, &frame).unwrap()));
    g.bench_function("liouville_1e5_128", |b| {
        b.iter(|| liouville_grid(&ensemble, spec, Clipping::Allow).unwrap())
    });
    let h = husimi_grid(states, spec, &frame).unwrap();
    let l = liouville_grid(&ensemble, spec, Clipping::Allow).unwrap();
    g.bench_function("overlap_128", |b| b.iter(|| overlap_measure(&l, &h, OverlapMode::Normalized).unwrap()));
    g.finish();
}

criterion_group!(benches, classical, kick, trajectories, phase_space);
criterion_main!(benches);
