use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelParams, Usage};
use crate::rng::{Domain, StreamFactory};
use crate::stats::pairwise_sum;

/// Pure state on the truncated momentum basis `n = -N..=N`.
/// Amplitude of `|n>` lives at index `n + N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumState {
    amps: Vec<Complex64>,
    half_width: usize,
}

impl MomentumState {
    pub fn zeros(half_width: usize) -> Self {
        MomentumState { amps: vec![Complex64::new(0.0, 0.0); 2 * half_width + 1], half_width }
    }

    /// Momentum eigenstate `|n0>`.
    pub fn eigenstate(half_width: usize, n0: i64) -> Result<Self> {
        if n0.unsigned_abs() as usize > half_width {
            return Err(Error::Config(format!("momentum n0 = {n0} outside basis half-width {half_width}")));
        }
        let mut s = Self::zeros(half_width);
        s.amps[(n0 + half_width as i64) as usize] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len().is_multiple_of(2) {
            return Err(Error::Config(format!("basis length {} is not odd", amps.len())));
        }
        let half_width = amps.len() / 2;
        Ok(MomentumState { amps, half_width })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// Amplitude of `|n>`.
    pub fn amp(&self, n: i64) -> Complex64 {
        self.amps[(n + self.half_width as i64) as usize]
    }

    pub fn momenta(&self) -> impl Iterator<Item = i64> {
        let n = self.half_width as i64;
        -n..=n
    }

    pub fn norm_sqr(&self) -> f64 {
        let w: Vec<f64> = self.amps.iter().map(|c| c.norm_sqr()).collect();
        pairwise_sum(&w)
    }

    pub fn normalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            for c in &mut self.amps {
                *c *= inv;
            }
        }
    }

    /// `<n>`, divided by the squared norm.
    pub fn mean_n(&self) -> f64 {
        let w: Vec<f64> = self.momenta().zip(&self.amps).map(|(n, c)| n as f64 * c.norm_sqr()).collect();
        pairwise_sum(&w) / self.norm_sqr()
    }

    pub fn populations(&self) -> Vec<f64> {
        let norm = self.norm_sqr();
        self.amps.iter().map(|c| c.norm_sqr() / norm).collect()
    }

    /// Population on the two outermost basis states.
    pub fn edge_population(&self) -> f64 {
        self.amps[0].norm_sqr() + self.amps[self.amps.len() - 1].norm_sqr()
    }

    pub fn inner(&self, other: &MomentumState) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Initial condition of one quantum trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectorySeed {
    pub index: usize,
    pub n0: i64,
}

/// Largest initial momentum index, `floor(pi / hbar_eff)`: the quantum
/// counterpart of the classical window `p in [-pi, pi]`.
pub fn initial_momentum_bound(hbar_eff: f64) -> i64 {
    (std::f64::consts::PI / hbar_eff).floor() as i64
}

/// Draws the momentum eigenstate `|n0>` each trajectory starts from, with
/// `n0` uniform in `[-floor(pi/hbar), floor(pi/hbar)]`. The induced mixture
/// has zero mean momentum and a uniform position marginal.
pub fn make_initial_mixture(
    params: &ModelParams,
    trajectories: usize,
    rng: &StreamFactory,
) -> Result<Vec<TrajectorySeed>> {
    params.validate(Usage::Quantum)?;
    if trajectories == 0 {
        return Err(Error::Config("at least one trajectory is required".into()));
    }
    let bound = initial_momentum_bound(params.hbar_eff);
    Ok((0..trajectories)
        .map(|index| {
            let n0 = rng.stream(Domain::QuantumInit, index as u64).integer_in(-bound, bound);
            TrajectorySeed { index, n0 }
        })
        .collect())
}
