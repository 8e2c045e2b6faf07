use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{GridSpec, ModelParams};
use crate::stats::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Liouville,
    Husimi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub params: Option<ModelParams>,
    pub step: Option<usize>,
    pub hbar_eff: Option<f64>,
    /// Particles outside the momentum window (Liouville only).
    pub overflow: usize,
    /// Total weight before normalization.
    pub sum_before_normalization: f64,
}

impl Default for GridMeta {
    fn default() -> Self {
        GridMeta { params: None, step: None, hbar_eff: None, overflow: 0, sum_before_normalization: 0.0 }
    }
}

/// Distribution over `x in [0, 2pi) x p in [p_min, p_max]`, stored row-major
/// with momentum rows (lowest `p` first) and `x` varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub spec: GridSpec,
    pub kind: GridKind,
    pub values: Vec<f64>,
    pub meta: GridMeta,
}

impl PhaseSpaceGrid {
    pub fn zeros(spec: GridSpec, kind: GridKind) -> Self {
        PhaseSpaceGrid { spec, kind, values: vec![0.0; spec.cells()], meta: GridMeta::default() }
    }

    #[inline]
    pub fn index(&self, xi: usize, pj: usize) -> usize {
        pj * self.spec.x_bins + xi
    }

    pub fn get(&self, xi: usize, pj: usize) -> f64 {
        self.values[self.index(xi, pj)]
    }

    pub fn total(&self) -> f64 {
        pairwise_sum(&self.values)
    }

    /// Scales the values to unit sum and records the prior total.
    pub fn normalize(&mut self) -> Result<()> {
        let total = self.total();
        if total.is_nan() || total <= 0.0 || !total.is_finite() {
            return Err(Error::Config(format!("cannot normalize grid with total {total}")));
        }
        for v in &mut self.values {
            *v /= total;
        }
        self.meta.sum_before_normalization = total;
        Ok(())
    }

    /// Two grids are comparable iff their bins and ranges match exactly.
    pub fn check_comparable(&self, other: &PhaseSpaceGrid) -> Result<()> {
        if self.spec == other.spec {
            Ok(())
        } else {
            Err(Error::IncomparableGrids(format!("{:?} vs {:?}", self.spec, other.spec)))
        }
    }

    /// Cell with the largest value, as `(x index, p index)`.
    pub fn argmax(&self) -> (usize, usize) {
        let (k, _) =
            self.values
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
        (k % self.spec.x_bins, k / self.spec.x_bins)
    }

    /// Number of cells holding more than `threshold` of the mass.
    pub fn occupied_cells(&self, threshold: f64) -> usize {
        self.values.iter().filter(|&&v| v > threshold).count()
    }

    /// Momentum marginal (sum over `x`), one value per momentum row.
    pub fn p_marginal(&self) -> Vec<f64> {
        self.values.chunks(self.spec.x_bins).map(pairwise_sum).collect()
    }

    /// Position marginal (sum over `p`).
    pub fn x_marginal(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.spec.x_bins];
        for row in self.values.chunks(self.spec.x_bins) {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc += v;
            }
        }
        m
    }

    /// Sums 2x2 blocks of cells into a grid with half the bins per axis.
    pub fn coarsen(&self) -> Result<PhaseSpaceGrid> {
        let (nx, np) = (self.spec.x_bins, self.spec.p_bins);
        if nx % 2 != 0 || np % 2 != 0 {
            return Err(Error::Config("coarsen needs even bin counts".into()));
        }
        let spec = GridSpec { x_bins: nx / 2, p_bins: np / 2, ..self.spec };
        let mut out = PhaseSpaceGrid::zeros(spec, self.kind);
        for pj in 0..np {
            for xi in 0..nx {
                let k = out.index(xi / 2, pj / 2);
                out.values[k] += self.get(xi, pj);
            }
        }
        out.meta = self.meta.clone();
        Ok(out)
    }
}
