//! Dense density-matrix reference integrator for small bases.

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::kick::KickOperator;
use super::state::TrajectorySeed;
use crate::error::{Error, Result};
use crate::params::{ModelParams, Usage};

/// Largest allowed integration step inside one dissipative interval.
pub const MAX_ORACLE_DT: f64 = 1e-3;

/// Trace drift beyond which the integration step is declared too coarse.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: Array2<Complex64>,
    half_width: usize,
}

impl DensityMatrix {
    pub fn zeros(half_width: usize) -> Self {
        let d = 2 * half_width + 1;
        DensityMatrix { rho: Array2::zeros((d, d)), half_width }
    }

    /// `|n0><n0|`.
    pub fn eigenstate(half_width: usize, n0: i64) -> Result<Self> {
        Self::mixture(half_width, &[(n0, 1.0)])
    }

    /// Diagonal mixture `sum_i w_i |n_i><n_i|`, normalized to unit trace.
    pub fn mixture(half_width: usize, weights: &[(i64, f64)]) -> Result<Self> {
        let mut m = Self::zeros(half_width);
        let mut total = 0.0;
        for &(n, w) in weights {
            if n.unsigned_abs() as usize > half_width {
                return Err(Error::Config(format!(
                    "momentum n0 = {n} outside basis half-width {half_width}"
                )));
            }
            let i = m.index(n);
            m.rho[[i, i]] += Complex64::new(w, 0.0);
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::EmptyEnsemble);
        }
        m.rho.mapv_inplace(|c| c / total);
        Ok(m)
    }

    /// Equal-weight mixture of the seeds' initial eigenstates.
    pub fn from_seeds(half_width: usize, seeds: &[TrajectorySeed]) -> Result<Self> {
        let w: Vec<(i64, f64)> = seeds.iter().map(|s| (s.n0, 1.0)).collect();
        Self::mixture(half_width, &w)
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.rho
    }

    fn index(&self, n: i64) -> usize {
        (n + self.half_width as i64) as usize
    }

    pub fn trace(&self) -> f64 {
        self.rho.diag().iter().map(|c| c.re).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.rho.diag().iter().map(|c| c.re).collect()
    }

    pub fn mean_n(&self) -> f64 {
        let nh = self.half_width as i64;
        (-nh..=nh).zip(self.rho.diag()).map(|(n, c)| n as f64 * c.re).sum::<f64>() / self.trace()
    }

    /// `max |rho - rho^dag|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.rho.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.rho[[i, j]] - self.rho[[j, i]].conj()).norm());
            }
        }
        worst
    }
}

/// Fixed-step RK4 integrator of the dissipator for one basis size.
#[derive(Debug, Clone)]
pub struct LindbladIntegrator {
    g2: f64,
    hbar: f64,
    half_width: usize,
    dt: f64,
}

impl LindbladIntegrator {
    pub fn new(params: &ModelParams, half_width: usize, dt: f64) -> Result<Self> {
        let g = params.jump_amplitude()?;
        Self::with_rate(g * g, params.hbar_eff, half_width, dt)
    }

    pub fn with_rate(g2: f64, hbar: f64, half_width: usize, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt <= MAX_ORACLE_DT) {
            return Err(Error::Config(format!("oracle step {dt} must lie in (0, {MAX_ORACLE_DT}]")));
        }
        Ok(LindbladIntegrator { g2, hbar, half_width, dt })
    }

    /// `sum_mu L rho L^dag - {L^dag L, rho} / 2`.
    fn rhs(&self, rho: &Array2<Complex64>, out: &mut Array2<Complex64>) {
        let nh = self.half_width as i64;
        let d = rho.nrows();
        for i in 0..d {
            let k = i as i64 - nh;
            for j in 0..d {
                let l = j as i64 - nh;
                let mut v = -0.5 * self.g2 * (k.abs() + l.abs()) as f64 * rho[[i, j]];
                if k >= 0 && l >= 0 && k < nh && l < nh {
                    let w = ((k + 1) as f64 * (l + 1) as f64).sqrt();
                    v += self.g2 * w * rho[[i + 1, j + 1]];
                }
                if k <= 0 && l <= 0 && k > -nh && l > -nh {
                    let w = ((1 - k) as f64 * (1 - l) as f64).sqrt();
                    v += self.g2 * w * rho[[i - 1, j - 1]];
                }
                out[[i, j]] = v;
            }
        }
    }

    /// Integrates the pure dissipator for `duration`.
    pub fn dissipate(&self, m: &mut DensityMatrix, duration: f64) {
        if self.g2 == 0.0 || duration <= 0.0 {
            return;
        }
        let steps = (duration / self.dt).ceil().max(1.0) as usize;
        let h = duration / steps as f64;
        let shape = m.rho.raw_dim();
        let (mut k1, mut k2, mut k3, mut k4) =
            (Array2::zeros(shape), Array2::zeros(shape), Array2::zeros(shape), Array2::zeros(shape));
        let mut tmp = Array2::zeros(shape);
        for _ in 0..steps {
            let rho = &m.rho;
            self.rhs(rho, &mut k1);
            Zip::from(&mut tmp).and(rho).and(&k1).for_each(|t, &r, &a| *t = r + 0.5 * h * a);
            self.rhs(&tmp, &mut k2);
            Zip::from(&mut tmp).and(rho).and(&k2).for_each(|t, &r, &a| *t = r + 0.5 * h * a);
            self.rhs(&tmp, &mut k3);
            Zip::from(&mut tmp).and(rho).and(&k3).for_each(|t, &r, &a| *t = r + h * a);
            self.rhs(&tmp, &mut k4);
            Zip::from(&mut m.rho)
                .and(&k1)
                .and(&k2)
                .and(&k3)
                .and(&k4)
                .for_each(|r, &a, &b, &c, &e| *r += h / 6.0 * (a + 2.0 * (b + c) + e));
        }
    }

    /// `rho <- R rho R^dag` with `R = exp(-i hbar n^2 / 2)`.
    pub fn rotate(&self, m: &mut DensityMatrix) {
        let nh = self.half_width as i64;
        let phase: Vec<Complex64> =
            (-nh..=nh).map(|n| Complex64::from_polar(1.0, -0.5 * self.hbar * (n * n) as f64)).collect();
        for ((i, j), c) in m.rho.indexed_iter_mut() {
            *c *= phase[i] * phase[j].conj();
        }
    }

    /// One dissipative interval: full free rotation, then unit-time dissipation.
    pub fn interval(&self, m: &mut DensityMatrix) {
        self.rotate(m);
        self.dissipate(m, 1.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub dt: f64,
    pub trace_tolerance: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { dt: MAX_ORACLE_DT, trace_tolerance: TRACE_DRIFT_LIMIT }
    }
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    /// `<p>` for `t = 0..=steps`.
    pub mean_p: Vec<f64>,
    pub populations: Vec<Vec<f64>>,
    /// Relative trace change across each dissipative integration.
    pub trace_drift: Vec<f64>,
    /// Trace removed by each truncated kick. Neither loss is renormalized away.
    pub kick_loss: Vec<f64>,
    pub final_state: DensityMatrix,
}

/// Evolves `rho0` through `steps` map periods with the same period structure
/// as the trajectory engine: dissipative interval, then exact kick
/// conjugation `U rho U^dag` with the truncated kick matrix.
pub fn dm_lindblad_oracle(
    rho0: DensityMatrix,
    params: &ModelParams,
    steps: usize,
    opts: &OracleOptions,
) -> Result<OracleRun> {
    params.validate(Usage::Quantum)?;
    let nh = rho0.half_width;
    let integrator = LindbladIntegrator::new(params, nh, opts.dt)?;
    let u = kick_matrix(&KickOperator::from_params(params, nh));
    oracle_with(rho0, &integrator, &u, params.hbar_eff, steps, opts)
}

pub(crate) fn kick_matrix(op: &KickOperator) -> Array2<Complex64> {
    let rows = op.matrix();
    let d = rows.len();
    Array2::from_shape_fn((d, d), |(i, j)| rows[i][j])
}

pub(crate) fn oracle_with(
    rho0: DensityMatrix,
    integrator: &LindbladIntegrator,
    u: &Array2<Complex64>,
    hbar: f64,
    steps: usize,
    opts: &OracleOptions,
) -> Result<OracleRun> {
    let mut m = rho0;
    let u_dag = u.t().mapv(|c| c.conj());
    let mut run = OracleRun {
        mean_p: vec![hbar * m.mean_n()],
        populations: vec![m.populations()],
        trace_drift: Vec::with_capacity(steps),
        kick_loss: Vec::with_capacity(steps),
        final_state: DensityMatrix::zeros(m.half_width),
    };
    for _ in 0..steps {
        let before = m.trace();
        integrator.interval(&mut m);
        let after = m.trace();
        let drift = (after - before).abs() / before;
        run.trace_drift.push(drift);
        if drift > opts.trace_tolerance {
            return Err(Error::TraceDrift(drift));
        }
        m.rho = u.dot(&m.rho).dot(&u_dag);
        run.kick_loss.push(after - m.trace());
        run.mean_p.push(hbar * m.mean_n());
        run.populations.push(m.populations());
    }
    run.final_state = m;
    Ok(run)
}
