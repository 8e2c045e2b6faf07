//! One inter-kick interval: free rotation followed by Lindblad dissipation,
//! unraveled into quantum jumps.
//!
//! The jump operators lower `|n|` by one (`L1` on the positive side, `L2` on
//! the negative side) with amplitude `g sqrt(|n|)`, so `sum L^dag L = g^2 |n|`
//! is diagonal. Between jumps the evolution is therefore exact: amplitudes
//! decay as `exp(-g^2 |n| t / 2)`. The full rotation `exp(-i hbar n^2 / 2)` is
//! applied at the start of the interval, so the drift uses the momentum left
//! by the previous kick and the damping acts on it afterwards; followed by the
//! kick this reproduces the classical map order (damp, kick, drift) exactly.
//! Jump times invert the survival probability `S(t) = sum_m W_m exp(-g^2 m t)`
//! with a bracketed Newton iteration.

use num_complex::Complex64;

use super::state::MomentumState;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rng::UniformSource;

/// Jump-time resolution of the bisection.
pub const JUMP_TIME_TOLERANCE: f64 = 1e-10;

/// Default bound on the population of the outermost basis states.
pub const LEAKAGE_THRESHOLD: f64 = 1e-8;

/// Diagonal operator on the momentum basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalPropagator {
    factors: Vec<Complex64>,
}

impl DiagonalPropagator {
    /// `exp(-i hbar n^2 t / 2)`.
    pub fn free_rotation(hbar: f64, half_width: usize, t: f64) -> Self {
        let nh = half_width as i64;
        let factors =
            (-nh..=nh).map(|n| Complex64::from_polar(1.0, -0.5 * hbar * (n * n) as f64 * t)).collect();
        DiagonalPropagator { factors }
    }

    /// `exp(-g^2 |n| t / 2)`.
    pub fn decay(g2: f64, half_width: usize, t: f64) -> Self {
        let nh = half_width as i64;
        let factors =
            (-nh..=nh).map(|n| Complex64::new((-0.5 * g2 * n.abs() as f64 * t).exp(), 0.0)).collect();
        DiagonalPropagator { factors }
    }

    /// Operator product `self * other`.
    pub fn compose(&self, other: &DiagonalPropagator) -> DiagonalPropagator {
        let factors = self.factors.iter().zip(&other.factors).map(|(a, b)| a * b).collect();
        DiagonalPropagator { factors }
    }

    pub fn apply(&self, s: &mut MomentumState) {
        for (c, f) in s.amplitudes_mut().iter_mut().zip(&self.factors) {
            *c *= f;
        }
    }

    pub fn factors(&self) -> &[Complex64] {
        &self.factors
    }
}

/// Which side of the momentum axis a jump acted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    /// `|k> <- |k+1>`, `k >= 0`.
    Lower,
    /// `|-k> <- |-k-1>`, `k >= 0`.
    Raise,
}

/// Unraveled dissipative channel for one basis size.
#[derive(Debug, Clone)]
pub struct Dissipator {
    g2: f64,
    half_width: usize,
    leakage_threshold: f64,
    full_rotation: DiagonalPropagator,
    sqrt_table: Vec<f64>,
}

/// Per-worker buffers for [`Dissipator::interval`].
#[derive(Debug, Default, Clone)]
pub struct DissipationScratch {
    weights: Vec<f64>,
}

impl Dissipator {
    /// Channel with `g = sqrt(-ln gamma)`; `gamma = 1` gives pure rotation.
    pub fn new(params: &ModelParams, half_width: usize) -> Result<Self> {
        let g = params.jump_amplitude()?;
        Ok(Self::with_rate(g * g, params.hbar_eff, half_width))
    }

    /// Channel with an explicit `g^2`.
    pub fn with_rate(g2: f64, hbar: f64, half_width: usize) -> Self {
        Dissipator {
            g2,
            half_width,
            leakage_threshold: LEAKAGE_THRESHOLD,
            full_rotation: DiagonalPropagator::free_rotation(hbar, half_width, 1.0),
            sqrt_table: (0..=half_width + 1).map(|m| (m as f64).sqrt()).collect(),
        }
    }

    pub fn with_leakage_threshold(mut self, threshold: f64) -> Self {
        self.leakage_threshold = threshold;
        self
    }

    /// Full-interval free rotation `exp(-i hbar n^2 / 2)`.
    pub fn free_rotation(&self) -> &DiagonalPropagator {
        &self.full_rotation
    }

    pub fn g2(&self) -> f64 {
        self.g2
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Evolves `s` through one unit interval. Returns the number of jumps.
    pub fn interval<R: UniformSource + ?Sized>(
        &self,
        s: &mut MomentumState,
        rng: &mut R,
        scratch: &mut DissipationScratch,
    ) -> Result<usize> {
        if s.half_width() != self.half_width {
            return Err(Error::Config(format!(
                "state half-width {} does not match dissipator half-width {}",
                s.half_width(),
                self.half_width
            )));
        }
        let edge = s.edge_population() / s.norm_sqr();
        if edge > self.leakage_threshold {
            return Err(Error::Leakage {
                leakage: edge,
                threshold: self.leakage_threshold,
                half_width: self.half_width,
            });
        }
        self.full_rotation.apply(s);
        let mut jumps = 0;
        if self.g2 > 0.0 {
            let mut t: f64 = 0.0;
            loop {
                let remaining = 1.0 - t;
                let top = self.fill_weights(s, &mut scratch.weights);
                let w = &scratch.weights[..=top];
                let r = 1.0 - rng.uniform();
                if top == 0 || horner(w, (-self.g2 * remaining).exp()).0 >= r {
                    self.decay(s, remaining, top);
                    s.normalize();
                    break;
                }
                let dt = self.jump_time(w, r, remaining);
                self.decay(s, dt, top);
                t += dt;
                let channel = self.pick_channel(s, top, rng);
                self.jump(s, channel);
                s.normalize();
                jumps += 1;
            }
        }
        Ok(jumps)
    }

    /// Solves `S(dt) = r` on `[0, remaining]` with Newton steps kept inside a
    /// shrinking bisection bracket; bisects whenever Newton would leave it.
    fn jump_time(&self, w: &[f64], r: f64, remaining: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, remaining);
        let mut dt = 0.5 * remaining;
        for _ in 0..200 {
            let u = (-self.g2 * dt).exp();
            let (sv, dp) = horner(w, u);
            let f = sv - r;
            if f > 0.0 {
                lo = dt;
            } else {
                hi = dt;
            }
            let slope = -self.g2 * u * dp;
            let newton = dt - f / slope;
            let next = if slope < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            let step = (next - dt).abs();
            dt = next;
            if step < 0.1 * JUMP_TIME_TOLERANCE || hi - lo < JUMP_TIME_TOLERANCE {
                break;
            }
        }
        dt
    }

    /// Normalized survival weights `W_m = |c_m|^2 + |c_-m|^2`. Returns the
    /// largest `m` with nonzero weight.
    fn fill_weights(&self, s: &MomentumState, w: &mut Vec<f64>) -> usize {
        let nh = self.half_width;
        let c = s.amplitudes();
        w.clear();
        w.push(c[nh].norm_sqr());
        for m in 1..=nh {
            w.push(c[nh + m].norm_sqr() + c[nh - m].norm_sqr());
        }
        let total: f64 = w.iter().sum();
        let mut top = 0;
        for (m, v) in w.iter_mut().enumerate() {
            *v /= total;
            if *v > 0.0 {
                top = m;
            }
        }
        top
    }

    fn decay(&self, s: &mut MomentumState, dt: f64, top: usize) {
        let nh = self.half_width;
        let v = (-0.5 * self.g2 * dt).exp();
        let c = s.amplitudes_mut();
        let mut f = v;
        for m in 1..=top {
            c[nh + m] *= f;
            c[nh - m] *= f;
            f *= v;
        }
    }

    fn pick_channel<R: UniformSource + ?Sized>(&self, s: &MomentumState, top: usize, rng: &mut R) -> Channel {
        let nh = self.half_width;
        let c = s.amplitudes();
        let (mut up, mut down) = (0.0, 0.0);
        for m in 1..=top {
            up += m as f64 * c[nh + m].norm_sqr();
            down += m as f64 * c[nh - m].norm_sqr();
        }
        if rng.uniform() * (up + down) < up {
            Channel::Lower
        } else {
            Channel::Raise
        }
    }

    /// Applies the jump operator of `channel`.
    fn jump(&self, s: &mut MomentumState, channel: Channel) {
        let nh = self.half_width;
        let zero = Complex64::new(0.0, 0.0);
        let c = s.amplitudes_mut();
        match channel {
            Channel::Lower => {
                for k in 0..nh {
                    c[nh + k] = c[nh + k + 1] * self.sqrt_table[k + 1];
                }
                c[2 * nh] = zero;
                c[..nh].fill(zero);
            }
            Channel::Raise => {
                for k in 0..nh {
                    c[nh - k] = c[nh - k - 1] * self.sqrt_table[k + 1];
                }
                c[0] = zero;
                c[nh + 1..].fill(zero);
            }
        }
    }
}

/// Value and derivative of `sum_m w_m u^m`.
#[inline]
fn horner(w: &[f64], u: f64) -> (f64, f64) {
    let (mut acc, mut der) = (0.0, 0.0);
    for &v in w.iter().rev() {
        der = der * u + acc;
        acc = acc * u + v;
    }
    (acc, der)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Domain, StreamFactory};
    use crate::stats::mean_and_se;

    fn coherent_superposition(half_width: usize) -> MomentumState {
        let amps = (0..2 * half_width + 1)
            .map(|i| {
                let n = i as f64 - half_width as f64;
                Complex64::from_polar((-(n - 3.0).powi(2) / 8.0).exp(), 0.3 * n)
            })
            .collect();
        let mut s = MomentumState::from_amplitudes(amps).unwrap();
        s.normalize();
        s
    }

    #[test]
    fn conservative_interval_is_pure_rotation() {
        let p = ModelParams::ratchet(1.0, 0.0, 0.3, 0.0);
        let d = Dissipator::new(&p, 20).unwrap();
        let s0 = coherent_superposition(20);
        let mut s = s0.clone();
        let mut rng = StreamFactory::new(1).stream(Domain::Test, 0);
        let jumps = d.interval(&mut s, &mut rng, &mut DissipationScratch::default()).unwrap();
        assert_eq!(jumps, 0);
        for n in -20i64..=20 {
            let expect = s0.amp(n) * Complex64::from_polar(1.0, -0.15 * (n * n) as f64);
            assert!((s.amp(n) - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_momentum_is_dark() {
        let p = ModelParams::ratchet(0.2, 0.0, 0.082, 0.0);
        let d = Dissipator::new(&p, 10).unwrap();
        let mut s = MomentumState::eigenstate(10, 0).unwrap();
        let mut rng = StreamFactory::new(2).stream(Domain::Test, 0);
        for _ in 0..5 {
            let jumps = d.interval(&mut s, &mut rng, &mut DissipationScratch::default()).unwrap();
            assert_eq!(jumps, 0);
        }
        assert!((s.amp(0).norm() - 1.0).abs() < 1e-15);
        assert_eq!(s.norm_sqr(), 1.0);
    }

    #[test]
    fn phase_and_decay_commute_exactly() {
        let rot = DiagonalPropagator::free_rotation(0.3, 16, 0.37);
        let dec = DiagonalPropagator::decay(0.8, 16, 0.37);
        let ab = rot.compose(&dec);
        let ba = dec.compose(&rot);
        assert_eq!(ab, ba);
        let mut s1 = coherent_superposition(16);
        let mut s2 = s1.clone();
        ab.apply(&mut s1);
        ba.apply(&mut s2);
        assert_eq!(s1, s2);
    }

    #[test]
    fn eigenstate_contracts_by_gamma_on_average() {
        let p = ModelParams::ratchet(0.5, 0.0, 0.082, 0.0);
        let d = Dissipator::new(&p, 16).unwrap();
        let rng = StreamFactory::new(5);
        let mut scratch = DissipationScratch::default();
        let ns: Vec<f64> = (0..10_000)
            .map(|i| {
                let mut s = MomentumState::eigenstate(16, 10).unwrap();
                let mut r = rng.stream(Domain::QuantumJumps, i);
                d.interval(&mut s, &mut r, &mut scratch).unwrap();
                s.mean_n()
            })
            .collect();
        let (m, se) = mean_and_se(&ns);
        assert!((m - 5.0).abs() < 3.0 * se, "<n> = {m} +- {se}");
    }

    #[test]
    fn negative_momenta_contract_symmetrically() {
        let p = ModelParams::ratchet(0.5, 0.0, 0.082, 0.0);
        let d = Dissipator::new(&p, 16).unwrap();
        let rng = StreamFactory::new(6);
        let mut scratch = DissipationScratch::default();
        let ns: Vec<f64> = (0..10_000)
            .map(|i| {
                let mut s = MomentumState::eigenstate(16, -10).unwrap();
                let mut r = rng.stream(Domain::QuantumJumps, i);
                d.interval(&mut s, &mut r, &mut scratch).unwrap();
                s.mean_n()
            })
            .collect();
        let (m, se) = mean_and_se(&ns);
        assert!((m + 5.0).abs() < 3.0 * se, "<n> = {m} +- {se}");
    }

    #[test]
    fn jump_time_matches_plain_bisection() {
        let d = Dissipator::with_rate(1.6, 0.1, 40);
        let mut rng = StreamFactory::new(4).stream(Domain::Test, 0);
        for _ in 0..200 {
            let mut w: Vec<f64> = (0..=40).map(|_| rng.uniform().powi(4)).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= total);
            let end = horner(&w, (-1.6f64).exp()).0;
            let r = end + (1.0 - end) * rng.uniform();
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if horner(&w, (-1.6 * mid).exp()).0 > r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((d.jump_time(&w, r, 1.0) - lo).abs() < JUMP_TIME_TOLERANCE);
        }
    }

    #[test]
    fn edge_population_triggers_leakage_error() {
        let p = ModelParams::ratchet(0.5, 0.0, 0.082, 0.0);
        let d = Dissipator::new(&p, 6).unwrap();
        let mut s = MomentumState::eigenstate(6, 6).unwrap();
        let mut rng = StreamFactory::new(1).stream(Domain::Test, 0);
        let err = d.interval(&mut s, &mut rng, &mut DissipationScratch::default()).unwrap_err();
        assert!(err.is_numerical());
    }
}
