//! Kick unitary `exp(-i k [cos x + (a/2) cos(2x + phi)])` applied by a
//! momentum -> position -> momentum FFT round trip.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::state::MomentumState;
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Norm change tolerated across one kick before the grid is declared too coarse.
pub const KICK_NORM_TOLERANCE: f64 = 1e-9;

pub struct KickOperator {
    half_width: usize,
    grid_len: usize,
    phases: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl fmt::Debug for KickOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KickOperator")
            .field("half_width", &self.half_width)
            .field("grid_len", &self.grid_len)
            .finish()
    }
}

/// Reusable buffers for [`KickOperator::apply`]; one per worker.
#[derive(Debug, Default, Clone)]
pub struct KickScratch {
    grid: Vec<Complex64>,
    fft: Vec<Complex64>,
}

/// Outcome of one kick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickOutcome {
    /// Probability pushed beyond `|n| > N` and discarded by the truncation.
    pub leaked: f64,
}

impl KickOperator {
    /// Kick of quantum strength `k_quantum = K / hbar_eff` on a basis of
    /// half-width `half_width`. The position grid has a power-of-two length of
    /// at least `4N + 2` points, grown further when the kick bandwidth would
    /// otherwise alias back into the basis.
    pub fn new(k_quantum: f64, a: f64, phi: f64, half_width: usize) -> Self {
        let bandwidth = (k_quantum.abs() * (1.0 + a.abs())).ceil() as usize
            + (10.0 * k_quantum.abs().cbrt()).ceil() as usize
            + 16;
        let needed = (4 * half_width + 2).max(2 * (half_width + bandwidth) + 2);
        let grid_len = needed.next_power_of_two();
        let phases = (0..grid_len)
            .map(|j| {
                let x = TAU * j as f64 / grid_len as f64;
                let v = x.cos() + 0.5 * a * (2.0 * x + phi).cos();
                Complex64::from_polar(1.0, -k_quantum * v)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid_len);
        let inverse = planner.plan_fft_inverse(grid_len);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        KickOperator { half_width, grid_len, phases, forward, inverse, scratch_len }
    }

    pub fn from_params(params: &ModelParams, half_width: usize) -> Self {
        Self::new(params.big_k / params.hbar_eff, params.a, params.phi, half_width)
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    /// Applies the kick in place without any consistency check. Returns the
    /// discarded out-of-basis weight and the full norm on the grid.
    pub fn apply_unchecked(&self, s: &mut MomentumState, scratch: &mut KickScratch) -> (f64, f64) {
        let m = self.grid_len;
        let nh = self.half_width as i64;
        let zero = Complex64::new(0.0, 0.0);
        scratch.grid.clear();
        scratch.grid.resize(m, zero);
        if scratch.fft.len() < self.scratch_len {
            scratch.fft.resize(self.scratch_len, zero);
        }
        for (n, c) in s.momenta().zip(s.amplitudes()) {
            scratch.grid[n.rem_euclid(m as i64) as usize] = *c;
        }
        // psi(x_j) = sum_n c_n e^{i n x_j}
        self.inverse.process_with_scratch(&mut scratch.grid, &mut scratch.fft);
        for (g, ph) in scratch.grid.iter_mut().zip(&self.phases) {
            *g *= ph;
        }
        self.forward.process_with_scratch(&mut scratch.grid, &mut scratch.fft);
        let inv_m = 1.0 / m as f64;
        let mut total = 0.0;
        for c in scratch.grid.iter_mut() {
            *c *= inv_m;
            total += c.norm_sqr();
        }
        let mut kept = 0.0;
        for (n, c) in (-nh..=nh).zip(s.amplitudes_mut()) {
            *c = scratch.grid[n.rem_euclid(m as i64) as usize];
            kept += c.norm_sqr();
        }
        ((total - kept).max(0.0), total)
    }

    /// Applies the kick. The norm on the position grid must be preserved to
    /// [`KICK_NORM_TOLERANCE`]; nothing is renormalized.
    pub fn apply(&self, s: &mut MomentumState, scratch: &mut KickScratch) -> Result<KickOutcome> {
        if s.half_width() != self.half_width {
            return Err(Error::Config(format!(
                "state half-width {} does not match kick half-width {}",
                s.half_width(),
                self.half_width
            )));
        }
        let before = s.norm_sqr();
        let (leaked, total) = self.apply_unchecked(s, scratch);
        let drift = (total - before).abs() / before.max(f64::MIN_POSITIVE);
        if drift > KICK_NORM_TOLERANCE {
            return Err(Error::NormDrift(drift));
        }
        Ok(KickOutcome { leaked })
    }

    /// Dense matrix `<n'|U|n>` on the truncated basis (row `n'`, column `n`).
    pub fn matrix(&self) -> Vec<Vec<Complex64>> {
        let dim = 2 * self.half_width + 1;
        let nh = self.half_width as i64;
        let mut scratch = KickScratch::default();
        let mut cols = Vec::with_capacity(dim);
        for n in -nh..=nh {
            let mut s = MomentumState::eigenstate(self.half_width, n).expect("inside basis");
            self.apply_unchecked(&mut s, &mut scratch);
            cols.push(s.amplitudes().to_vec());
        }
        (0..dim).map(|r| (0..dim).map(|c| cols[c][r]).collect()).collect()
    }
}
