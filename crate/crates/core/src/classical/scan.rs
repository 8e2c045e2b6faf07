//! Two-parameter `(gamma, K)` scans of the attractor classification.
//!
//! Rows are indexed by `K` and cells within a row by `gamma`. Each finished
//! row is handed to a sink before the next one starts, and a checkpoint of
//! completed rows lets an interrupted scan resume.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::attractor::{classify_attractor, AttractorReport, ClassifyOptions};
use crate::error::{Error, Result};
use crate::params::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub gamma_range: (f64, f64),
    pub k_range: (f64, f64),
    /// Lattice points along `(gamma, K)`.
    pub resolution: (usize, usize),
    /// Held fixed across the scan (`temperature` must be 0).
    pub base: ModelParams,
    #[serde(default)]
    pub classify: ClassifyOptions,
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        let (ng, nk) = self.resolution;
        if ng < 2 || nk < 2 {
            return Err(Error::Config("scan resolution must be at least 2 per axis".into()));
        }
        let (g0, g1) = self.gamma_range;
        if !(0.0..=1.0).contains(&g0) || !(0.0..=1.0).contains(&g1) || g0 > g1 {
            return Err(Error::Config(format!("gamma range ({g0}, {g1}) outside [0, 1]")));
        }
        let (k0, k1) = self.k_range;
        if k0 < 0.0 || k0 > k1 || !k1.is_finite() {
            return Err(Error::Config(format!("K range ({k0}, {k1}) invalid")));
        }
        Ok(())
    }

    fn axis(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        lo + (hi - lo) * i as f64 / (n - 1) as f64
    }

    pub fn gamma_at(&self, i: usize) -> f64 {
        Self::axis(self.gamma_range.0, self.gamma_range.1, self.resolution.0, i)
    }

    pub fn k_at(&self, j: usize) -> f64 {
        Self::axis(self.k_range.0, self.k_range.1, self.resolution.1, j)
    }

    pub fn rows(&self) -> usize {
        self.resolution.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub gamma: f64,
    pub k: f64,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellOutcome {
    Report(AttractorReport),
    Error(String),
}

impl ScanCell {
    pub fn report(&self) -> Option<&AttractorReport> {
        match &self.outcome {
            CellOutcome::Report(r) => Some(r),
            CellOutcome::Error(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDiagnostic {
    pub row: usize,
    pub column: usize,
    pub gamma: f64,
    pub k: f64,
    pub message: String,
}

/// Resumable progress of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCheckpoint {
    pub spec: ScanSpec,
    pub completed_rows: usize,
    pub diagnostics: Vec<CellDiagnostic>,
}

impl ScanCheckpoint {
    pub fn fresh(spec: ScanSpec) -> Self {
        ScanCheckpoint { spec, completed_rows: 0, diagnostics: Vec::new() }
    }

    pub fn is_complete(&self) -> bool {
        self.completed_rows >= self.spec.rows()
    }
}

pub fn scan_row(spec: &ScanSpec, row: usize) -> Vec<ScanCell> {
    let k = spec.k_at(row);
    (0..spec.resolution.0)
        .into_par_iter()
        .map(|i| {
            let gamma = spec.gamma_at(i);
            let params = ModelParams { gamma, big_k: k, ..spec.base };
            let outcome = match classify_attractor(&params, &spec.classify) {
                Ok(r) => CellOutcome::Report(r),
                Err(e) => CellOutcome::Error(e.to_string()),
            };
            ScanCell { gamma, k, outcome }
        })
        .collect()
}

/// Runs (or resumes) a scan. `sink` receives each completed row together
/// with the updated checkpoint; an error from the sink stops the scan with
/// the checkpoint still describing the rows already delivered.
pub fn scan_parameter_space<F>(start: ScanCheckpoint, mut sink: F) -> Result<ScanCheckpoint>
where
    F: FnMut(usize, &[ScanCell], &ScanCheckpoint) -> Result<()>,
{
    start.spec.validate()?;
    let mut ckpt = start;
    while !ckpt.is_complete() {
        let row = ckpt.completed_rows;
        let cells = scan_row(&ckpt.spec, row);
        let mut next = ckpt.clone();
        for (column, c) in cells.iter().enumerate() {
            if let CellOutcome::Error(message) = &c.outcome {
                next.diagnostics.push(CellDiagnostic {
                    row,
                    column,
                    gamma: c.gamma,
                    k: c.k,
                    message: message.clone(),
                });
            }
        }
        next.completed_rows += 1;
        sink(row, &cells, &next)?;
        ckpt = next;
    }
    Ok(ckpt)
}
