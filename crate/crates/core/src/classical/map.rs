use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::params::ModelParams;
use crate::rng::NoiseSource;

/// A point on the cylinder. The position is kept wrapped in `[0, 2pi)`
/// together with an integer winding number, so the unwrapped position
/// `x + 2pi * winding` never loses precision in the kick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    x: f64,
    winding: i64,
    /// Rescaled momentum `p = hbar_eff * n`.
    pub p: f64,
}

impl ClassicalState {
    /// State at an arbitrary (unwrapped) position.
    pub fn new(x: f64, p: f64) -> Self {
        let (x, winding) = wrap(x);
        ClassicalState { x, winding, p }
    }

    /// Position reduced to `[0, 2pi)`.
    pub fn wrapped_x(&self) -> f64 {
        self.x
    }

    pub fn winding(&self) -> i64 {
        self.winding
    }

    pub fn unwrapped_x(&self) -> f64 {
        self.x + TAU * self.winding as f64
    }

    /// Moves the position by `dx`, keeping the wrapped/unwrapped pair consistent.
    pub fn shift(&mut self, dx: f64) {
        let (x, w) = wrap(self.x + dx);
        self.x = x;
        self.winding += w;
    }
}

fn wrap(x: f64) -> (f64, i64) {
    let turns = (x / TAU).floor();
    let mut r = x - turns * TAU;
    let mut w = turns as i64;
    if r >= TAU {
        r -= TAU;
        w += 1;
    }
    if r < 0.0 {
        r += TAU;
        w -= 1;
    }
    (r, w)
}

/// Kick force `K [sin x + a sin(2x + phi)]`.
#[inline]
pub fn kick_force(x: f64, params: &ModelParams) -> f64 {
    params.big_k * (x.sin() + params.a * (2.0 * x + params.phi).sin())
}

/// Deterministic dissipative map step:
/// `p' = gamma p + K [sin x + a sin(2x + phi)]`, `x' = x + p'`.
#[inline]
pub fn map_step(s: ClassicalState, params: &ModelParams) -> ClassicalState {
    kicked_map_step(s, params, 0.0)
}

/// Map step with an explicit additive momentum kick `xi` applied before the
/// position update.
#[inline]
pub fn kicked_map_step(s: ClassicalState, params: &ModelParams, xi: f64) -> ClassicalState {
    let p = params.gamma * s.p + kick_force(s.x, params) + xi;
    let mut next = ClassicalState { p, ..s };
    next.shift(p);
    next
}

/// Map step with Gaussian thermal noise of variance `2 (1 - gamma) T` added
/// to the new momentum; the noisy momentum drives the position update.
/// At zero noise no random number is drawn.
#[inline]
pub fn thermal_map_step<N: NoiseSource + ?Sized>(
    s: ClassicalState,
    params: &ModelParams,
    noise: &mut N,
) -> ClassicalState {
    let sigma = params.noise_sigma();
    if sigma == 0.0 {
        return map_step(s, params);
    }
    kicked_map_step(s, params, sigma * noise.standard_normal())
}

/// Circular distance between two wrapped positions.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % TAU;
    d.min(TAU - d)
}
