use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::map::{map_step, thermal_map_step, ClassicalState};
use crate::error::{Error, Result};
use crate::params::{ModelParams, Usage};
use crate::rng::{Domain, Stream, StreamFactory};
use crate::stats::pairwise_sum;

/// Particles per work unit. Reductions are pairwise within a chunk and then
/// pairwise across chunks, so the summation tree never depends on threads.
const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub states: Vec<ClassicalState>,
}

impl Ensemble {
    pub fn new(states: Vec<ClassicalState>) -> Self {
        Ensemble { states }
    }

    /// Uniform ensemble with `x` in `[0, 2pi)` and `p` in `[-pi, pi]`;
    /// particle `i` draws from its own initial-condition stream.
    pub fn uniform(size: usize, rng: &StreamFactory) -> Self {
        let states = (0..size)
            .into_par_iter()
            .map(|i| {
                let mut s = rng.stream(Domain::ClassicalInit, i as u64);
                let x = s.uniform_in(0.0, TAU);
                let p = s.uniform_in(-PI, PI);
                ClassicalState::new(x, p)
            })
            .collect();
        Ensemble { states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn mean_p(&self) -> f64 {
        let sums: Vec<f64> = self
            .states
            .chunks(CHUNK)
            .map(|c| pairwise_sum(&c.iter().map(|s| s.p).collect::<Vec<_>>()))
            .collect();
        pairwise_sum(&sums) / self.len() as f64
    }
}

/// Ratchet current `J(t) = <p>` for `t = 0..=steps`, with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentSeries {
    pub values: Vec<f64>,
    pub std_err: Vec<f64>,
}

impl CurrentSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// Mean of the last `tail` values.
    pub fn tail_mean(&self, tail: usize) -> f64 {
        let n = self.values.len();
        let tail = tail.clamp(1, n);
        crate::stats::mean(&self.values[n - tail..])
    }
}

struct ChunkSums {
    p: Vec<f64>,
    p2: Vec<f64>,
}

fn chunk_moments(states: &[ClassicalState]) -> (f64, f64) {
    let p: Vec<f64> = states.iter().map(|s| s.p).collect();
    let p2: Vec<f64> = p.iter().map(|v| v * v).collect();
    (pairwise_sum(&p), pairwise_sum(&p2))
}

fn evolve_chunk(
    states: &mut [ClassicalState],
    first_index: usize,
    params: &ModelParams,
    steps: usize,
    rng: &StreamFactory,
) -> ChunkSums {
    let noisy = params.noise_sigma() > 0.0;
    let mut streams: Vec<Stream> = if noisy {
        (0..states.len()).map(|k| rng.stream(Domain::ClassicalNoise, (first_index + k) as u64)).collect()
    } else {
        Vec::new()
    };
    let mut sums = ChunkSums { p: Vec::with_capacity(steps + 1), p2: Vec::with_capacity(steps + 1) };
    let (s, s2) = chunk_moments(states);
    sums.p.push(s);
    sums.p2.push(s2);
    for _ in 0..steps {
        if noisy {
            for (st, stream) in states.iter_mut().zip(streams.iter_mut()) {
                *st = thermal_map_step(*st, params, stream);
            }
        } else {
            for st in states.iter_mut() {
                *st = map_step(*st, params);
            }
        }
        let (s, s2) = chunk_moments(states);
        sums.p.push(s);
        sums.p2.push(s2);
    }
    sums
}

/// Evolves every particle for `steps` map periods (thermal when `T > 0`) and
/// records `J(t)` after each step. Results are bit-identical for any number
/// of worker threads.
pub fn evolve_ensemble(
    mut ensemble: Ensemble,
    params: &ModelParams,
    steps: usize,
    rng: &StreamFactory,
) -> Result<(Ensemble, CurrentSeries)> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    params.validate(Usage::Classical)?;
    let chunk_sums: Vec<ChunkSums> = ensemble
        .states
        .par_chunks_mut(CHUNK)
        .enumerate()
        .map(|(c, chunk)| evolve_chunk(chunk, c * CHUNK, params, steps, rng))
        .collect();

    let n = ensemble.len() as f64;
    let mut values = Vec::with_capacity(steps + 1);
    let mut std_err = Vec::with_capacity(steps + 1);
    let mut col = Vec::with_capacity(chunk_sums.len());
    for t in 0..=steps {
        col.clear();
        col.extend(chunk_sums.iter().map(|c| c.p[t]));
        let mean = pairwise_sum(&col) / n;
        col.clear();
        col.extend(chunk_sums.iter().map(|c| c.p2[t]));
        let mean_sq = pairwise_sum(&col) / n;
        let var = if n > 1.0 { ((mean_sq - mean * mean) * n / (n - 1.0)).max(0.0) } else { 0.0 };
        values.push(mean);
        std_err.push((var / n).sqrt());
    }
    Ok((ensemble, CurrentSeries { values, std_err }))
}

/// Draws `samples` thermal kicks `xi` exactly as the noisy map does.
pub fn sample_thermal_kicks(params: &ModelParams, samples: usize, rng: &StreamFactory) -> Vec<f64> {
    let sigma = params.noise_sigma();
    let mut s = rng.stream(Domain::ClassicalNoise, u64::MAX);
    (0..samples).map(|_| sigma * s.standard_normal()).collect()
}
