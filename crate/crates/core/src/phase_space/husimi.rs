use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::grid::{GridKind, PhaseSpaceGrid};
use crate::error::{Error, Result};
use crate::params::GridSpec;
use crate::quantum::MomentumState;

/// Gaussian weights below `exp(-WINDOW_SIGMAS^2 / 4)` of the peak are dropped.
const WINDOW_SIGMAS: f64 = 14.0;

/// Tail bound for the wrapped position-space Gaussian.
const WRAP_TAIL: f64 = 1e-12;

/// Minimum-uncertainty coherent states on the cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentFrame {
    pub hbar_eff: f64,
    /// Momentum width; the position width is `hbar_eff / (2 sigma_p)`.
    pub sigma_p: f64,
    /// Number of `2pi` images kept on each side in position space.
    pub wrap_terms: usize,
}

impl CoherentFrame {
    /// Symmetric frame `sigma_p = sqrt(hbar_eff / 2)` with just enough images
    /// for the dropped tail to stay below `1e-12`.
    pub fn new(hbar_eff: f64) -> Result<Self> {
        Self::with_sigma(hbar_eff, (hbar_eff / 2.0).sqrt())
    }

    pub fn with_sigma(hbar_eff: f64, sigma_p: f64) -> Result<Self> {
        if !(hbar_eff > 0.0 && sigma_p > 0.0) {
            return Err(Error::Config(format!(
                "coherent frame needs hbar_eff > 0 and sigma_p > 0, got {hbar_eff}, {sigma_p}"
            )));
        }
        let sx = hbar_eff / (2.0 * sigma_p);
        // Nearest dropped image sits at least (2 wrap_terms + 1) pi away.
        let mut wrap_terms = 0;
        while (-(((2 * wrap_terms + 1) as f64 * PI).powi(2)) / (4.0 * sx * sx)).exp() >= WRAP_TAIL {
            wrap_terms += 1;
        }
        Ok(CoherentFrame { hbar_eff, sigma_p, wrap_terms })
    }

    pub fn sigma_x(&self) -> f64 {
        self.hbar_eff / (2.0 * self.sigma_p)
    }

    /// `G_n(p0) = exp(-(hbar n - p0)^2 / (4 sigma_p^2))`.
    #[inline]
    pub fn momentum_weight(&self, n: i64, p0: f64) -> f64 {
        let d = self.hbar_eff * n as f64 - p0;
        (-d * d / (4.0 * self.sigma_p * self.sigma_p)).exp()
    }

    /// Momentum indices with non-negligible weight around `p0`.
    fn window(&self, p0: f64) -> (i64, i64) {
        let half = WINDOW_SIGMAS * self.sigma_p / self.hbar_eff;
        let c = p0 / self.hbar_eff;
        ((c - half).floor() as i64, (c + half).ceil() as i64)
    }

    /// Coherent state `<n|z>` on the basis of `half_width`, normalized on the
    /// full (untruncated) momentum lattice.
    pub fn coherent_state(&self, half_width: usize, x0: f64, p0: f64) -> MomentumState {
        let nh = half_width as i64;
        let norm = self.lattice_norm(p0).sqrt();
        let amps = (-nh..=nh)
            .map(|n| Complex64::from_polar(self.momentum_weight(n, p0) / norm, -(n as f64) * x0))
            .collect();
        MomentumState::from_amplitudes(amps).expect("odd length")
    }

    /// `sum_n G_n(p0)^2` over all integers.
    fn lattice_norm(&self, p0: f64) -> f64 {
        let (lo, hi) = self.window(p0);
        (lo..=hi).map(|n| self.momentum_weight(n, p0).powi(2)).sum()
    }

    /// Coherent state in position space, `z(x) = sum_j g(d + 2pi j)` with
    /// `d = x - x0` reduced to `[-pi, pi)` and `|j| <= wrap_terms`, unnormalized.
    pub fn position_amplitude(&self, x: f64, x0: f64, p0: f64) -> Complex64 {
        let sx = self.sigma_x();
        let w = self.wrap_terms as i64;
        // The full image sum is 2pi-periodic in x - x0.
        let d = (x - x0 + PI).rem_euclid(TAU) - PI;
        (-w..=w)
            .map(|j| {
                let y = d + TAU * j as f64;
                Complex64::from_polar((-y * y / (4.0 * sx * sx)).exp(), p0 * y / self.hbar_eff)
            })
            .sum()
    }

    /// `|<z(x0, p0)|psi>|^2` for a normalized coherent state, evaluated in the
    /// momentum basis.
    pub fn husimi_value(&self, s: &MomentumState, x0: f64, p0: f64) -> f64 {
        let z = self.coherent_state(s.half_width(), x0, p0);
        z.inner(s).norm_sqr() / s.norm_sqr()
    }

    /// Same value computed by quadrature of the wrapped position-space
    /// Gaussian on `points` nodes; for cross-checks only.
    pub fn husimi_value_position(&self, s: &MomentumState, x0: f64, p0: f64, points: usize) -> f64 {
        let h = TAU / points as f64;
        let mut overlap = Complex64::new(0.0, 0.0);
        let mut zz = 0.0;
        for k in 0..points {
            let x = k as f64 * h;
            let z = self.position_amplitude(x, x0, p0);
            let psi: Complex64 = s
                .momenta()
                .zip(s.amplitudes())
                .map(|(n, c)| c * Complex64::from_polar(1.0, n as f64 * x))
                .sum();
            overlap += z.conj() * psi;
            zz += z.norm_sqr();
        }
        // <psi|psi> on the same nodes is points * sum |c_n|^2.
        overlap.norm_sqr() / (zz * points as f64 * s.norm_sqr())
    }
}

/// Husimi distribution averaged over `snapshots` at the cell centres of
/// `spec`, normalized to unit sum.
///
/// Each momentum row costs one FFT of length `x_bins` per snapshot: the
/// window `d_n = c_n G_n(p0)` is folded modulo `x_bins` after the half-cell
/// phase shift, so the inverse transform yields `<z(x_i, p0)|psi>` at every
/// `x_i = (i + 1/2) dx`.
pub fn husimi_grid(
    snapshots: &[MomentumState],
    spec: GridSpec,
    frame: &CoherentFrame,
) -> Result<PhaseSpaceGrid> {
    spec.validate()?;
    let first = snapshots.first().ok_or(Error::EmptyEnsemble)?;
    let nh = first.half_width();
    if let Some(bad) = snapshots.iter().find(|s| s.half_width() != nh) {
        return Err(Error::SnapshotMismatch(format!(
            "basis half-width {} differs from {}",
            bad.half_width(),
            nh
        )));
    }
    let nx = spec.x_bins;
    let fft = FftPlanner::new().plan_fft_inverse(nx);
    let norms: Vec<f64> = snapshots.iter().map(|s| s.norm_sqr()).collect();
    let shift: Vec<Complex64> =
        (-(nh as i64)..=nh as i64).map(|n| Complex64::from_polar(1.0, PI * n as f64 / nx as f64)).collect();

    let rows: Vec<Vec<f64>> = (0..spec.p_bins)
        .into_par_iter()
        .map_init(
            || {
                (
                    vec![Complex64::new(0.0, 0.0); nx],
                    vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
                )
            },
            |(buf, scratch), pj| {
                let p0 = spec.p_center(pj);
                let mut row = vec![0.0; nx];
                let (lo, hi) = frame.window(p0);
                let (lo, hi) = (lo.max(-(nh as i64)), hi.min(nh as i64));
                if lo > hi {
                    return row;
                }
                let inv_norm = 1.0 / frame.lattice_norm(p0);
                let weights: Vec<f64> = (lo..=hi).map(|n| frame.momentum_weight(n, p0)).collect();
                for (s, norm) in snapshots.iter().zip(&norms) {
                    buf.fill(Complex64::new(0.0, 0.0));
                    let amps = s.amplitudes();
                    let mut any = false;
                    for (n, w) in (lo..=hi).zip(&weights) {
                        let k = (n + nh as i64) as usize;
                        let c = amps[k];
                        if c.re != 0.0 || c.im != 0.0 {
                            buf[n.rem_euclid(nx as i64) as usize] += c * shift[k] * *w;
                            any = true;
                        }
                    }
                    if !any {
                        continue;
                    }
                    fft.process_with_scratch(buf, scratch);
                    let scale = inv_norm / norm;
                    for (r, v) in row.iter_mut().zip(buf.iter()) {
                        *r += v.norm_sqr() * scale;
                    }
                }
                row
            },
        )
        .collect();

    let mut grid = PhaseSpaceGrid::zeros(spec, GridKind::Husimi);
    for (dst, row) in grid.values.chunks_mut(nx).zip(&rows) {
        dst.copy_from_slice(row);
    }
    grid.meta.hbar_eff = Some(frame.hbar_eff);
    grid.normalize()?;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Domain, StreamFactory};

    fn random_state(half_width: usize, seed: u64) -> MomentumState {
        let mut rng = StreamFactory::new(seed).stream(Domain::Test, 0);
        let amps = (0..2 * half_width + 1)
            .map(|i| {
                let n = i as f64 - half_width as f64;
                Complex64::new(rng.standard_normal(), rng.standard_normal()) * (-(n * n) / 200.0).exp()
            })
            .collect();
        let mut s = MomentumState::from_amplitudes(amps).unwrap();
        s.normalize();
        s
    }

    #[test]
    fn frame_width_and_images() {
        let f = CoherentFrame::new(0.082).unwrap();
        assert!((f.sigma_p - 0.041f64.sqrt()).abs() < 1e-15);
        assert!((f.sigma_x() - f.sigma_p).abs() < 1e-15);
        let sx = f.sigma_x();
        let dropped = ((2 * f.wrap_terms + 1) as f64 * PI).powi(2) / (4.0 * sx * sx);
        assert!((-dropped).exp() < 1e-12);
        assert!(CoherentFrame::new(20.0).unwrap().wrap_terms >= 1);
        assert!(CoherentFrame::new(0.0).is_err());
    }

    #[test]
    fn eigenstate_gives_uniform_ridge() {
        let spec = GridSpec::symmetric(64, 5.0);
        let f = CoherentFrame::new(0.1).unwrap();
        let s = MomentumState::eigenstate(80, 20).unwrap();
        let g = husimi_grid(&[s], spec, &f).unwrap();
        assert!((g.total() - 1.0).abs() < 1e-12);
        let marg = g.p_marginal();
        let peak = marg.iter().enumerate().fold(0, |b, (j, &v)| if v > marg[b] { j } else { b });
        assert!((spec.p_center(peak) - 2.0).abs() <= spec.dp());
        for j in 0..spec.p_bins {
            let row = &g.values[j * 64..(j + 1) * 64];
            let max = row.iter().cloned().fold(0.0, f64::max);
            let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(max - min <= 1e-12 * max.max(1e-300), "row {j} not flat");
        }
    }

    #[test]
    fn coherent_state_peaks_at_its_centre() {
        let spec = GridSpec::symmetric(128, 4.0);
        let f = CoherentFrame::new(0.05).unwrap();
        for (x0, p0) in [(1.3, -1.1), (5.0, 2.4), (0.02, 0.0)] {
            let z = f.coherent_state(120, x0, p0);
            let g = husimi_grid(&[z], spec, &f).unwrap();
            let (xi, pj) = g.argmax();
            let dxs = crate::classical::circular_distance(spec.x_center(xi), x0);
            assert!(dxs <= spec.dx(), "x: {} vs {x0}", spec.x_center(xi));
            assert!((spec.p_center(pj) - p0).abs() <= spec.dp(), "p: {} vs {p0}", spec.p_center(pj));
        }
    }

    #[test]
    fn fft_rows_match_direct_overlaps() {
        let spec = GridSpec::new(32, 16, -2.0, 2.0);
        let f = CoherentFrame::new(0.2).unwrap();
        let s = random_state(24, 3);
        let g = husimi_grid(std::slice::from_ref(&s), spec, &f).unwrap();
        let total = g.meta.sum_before_normalization;
        for (xi, pj) in [(0, 3), (7, 8), (31, 15), (16, 0)] {
            let direct = f.husimi_value(&s, spec.x_center(xi), spec.p_center(pj));
            assert!((g.get(xi, pj) * total - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn position_route_agrees_and_images_converge() {
        let f = CoherentFrame::new(0.3).unwrap();
        let s = random_state(20, 9);
        for (x0, p0) in [(0.1, 0.5), (3.0, -1.2), (6.2, 2.0)] {
            let a = f.husimi_value(&s, x0, p0);
            let b = f.husimi_value_position(&s, x0, p0, 256);
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            let more = CoherentFrame { wrap_terms: f.wrap_terms + 1, ..f };
            let c = more.husimi_value_position(&s, x0, p0, 256);
            assert!((b - c).abs() < 1e-12);
        }
    }

    #[test]
    fn snapshot_mismatch_is_an_error() {
        let spec = GridSpec::symmetric(16, 2.0);
        let f = CoherentFrame::new(0.1).unwrap();
        let a = MomentumState::eigenstate(4, 0).unwrap();
        let b = MomentumState::eigenstate(5, 0).unwrap();
        assert!(matches!(husimi_grid(&[a, b], spec, &f), Err(Error::SnapshotMismatch(_))));
        assert!(husimi_grid(&[], spec, &f).is_err());
    }
}
