//! Artifact formats: current CSVs, scan rows, snapshot records and grid files.
//!
//! Floats are written with Rust's shortest round-trip formatting, so the
//! same values always produce the same bytes.
//!
//! Snapshot record layout (all little-endian):
//! `u64 N`, `f64 hbar_eff`, `u64 step`, then `2(2N+1)` `f64` values
//! interleaving re/im of `c_{-N} .. c_N`.
//!
//! A grid is written as three files sharing a stem: `.pgm` (16-bit
//! big-endian P5, max-normalized, top row = highest momentum), `.json`
//! (sidecar) and `.f64` (exact values, little-endian, row-major as stored).

use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::{CellOutcome, ScanCell};
use crate::error::{Error, Result};
use crate::params::{GridSpec, ModelParams};
use crate::phase_space::{GridKind, GridMeta, PhaseSpaceGrid};
use crate::quantum::MomentumState;

pub fn write_current_csv<W: Write>(mut w: W, values: &[f64]) -> io::Result<()> {
    writeln!(w, "t,J")?;
    for (t, v) in values.iter().enumerate() {
        writeln!(w, "{t},{v}")?;
    }
    w.flush()
}

pub fn write_current_se_csv<W: Write>(mut w: W, values: &[f64], std_err: &[f64]) -> io::Result<()> {
    writeln!(w, "t,J,SE")?;
    for (t, (v, se)) in values.iter().zip(std_err).enumerate() {
        writeln!(w, "{t},{v},{se}")?;
    }
    w.flush()
}

/// Parses either CSV layout back into `(J, SE)`; SE is empty for `t,J`.
pub fn read_current_csv<R: Read>(mut r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let with_se = match header {
        "t,J" => false,
        "t,J,SE" => true,
        other => return Err(Error::Config(format!("unexpected CSV header '{other}'"))),
    };
    let (mut j, mut se) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let bad = || Error::Config(format!("malformed CSV row {}: '{line}'", i + 1));
        if cols.len() != if with_se { 3 } else { 2 } {
            return Err(bad());
        }
        j.push(cols[1].parse().map_err(|_| bad())?);
        if with_se {
            se.push(cols[2].parse().map_err(|_| bad())?);
        }
    }
    Ok((j, se))
}

pub const SCAN_HEADER: &str = "gamma,K,period,M,chaotic,settle_time";

/// One scan CSV row; missing quantities (and failed cells) are `NA`.
pub fn scan_csv_row(cell: &ScanCell) -> String {
    fn opt<T: ToString>(v: Option<T>) -> String {
        v.map_or_else(|| "NA".to_string(), |v| v.to_string())
    }
    match &cell.outcome {
        CellOutcome::Report(r) => format!(
            "{},{},{},{},{},{}",
            cell.gamma,
            cell.k,
            opt(r.period),
            r.label(),
            r.chaotic,
            opt(r.settle_time)
        ),
        CellOutcome::Error(_) => format!("{},{},NA,NA,NA,NA", cell.gamma, cell.k),
    }
}

pub fn write_snapshot<W: Write>(
    mut w: W,
    state: &MomentumState,
    hbar_eff: f64,
    step: usize,
) -> io::Result<()> {
    w.write_all(&(state.half_width() as u64).to_le_bytes())?;
    w.write_all(&hbar_eff.to_le_bytes())?;
    w.write_all(&(step as u64).to_le_bytes())?;
    for c in state.amplitudes() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    w.flush()
}

/// Reads one snapshot record; returns `(state, hbar_eff, step)`.
pub fn read_snapshot<R: Read>(mut r: R) -> Result<(MomentumState, f64, usize)> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let n = u64::from_le_bytes(next(&mut r)?) as usize;
    let hbar = f64::from_le_bytes(next(&mut r)?);
    let step = u64::from_le_bytes(next(&mut r)?) as usize;
    if n > 1 << 24 {
        return Err(Error::SnapshotMismatch(format!("implausible half-width {n}")));
    }
    let mut amps = Vec::with_capacity(2 * n + 1);
    for _ in 0..2 * n + 1 {
        let re = f64::from_le_bytes(next(&mut r)?);
        let im = f64::from_le_bytes(next(&mut r)?);
        amps.push(Complex64::new(re, im));
    }
    Ok((MomentumState::from_amplitudes(amps)?, hbar, step))
}

/// Grid metadata stored next to the heatmap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub kind: GridKind,
    pub x_bins: usize,
    pub p_bins: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub sum_before_normalization: f64,
    pub params: Option<ModelParams>,
    #[serde(default)]
    pub step: Option<usize>,
    #[serde(default)]
    pub hbar_eff: Option<f64>,
    #[serde(default)]
    pub overflow: usize,
}

impl GridSidecar {
    pub fn of(grid: &PhaseSpaceGrid) -> Self {
        GridSidecar {
            kind: grid.kind,
            x_bins: grid.spec.x_bins,
            p_bins: grid.spec.p_bins,
            p_min: grid.spec.p_min,
            p_max: grid.spec.p_max,
            sum_before_normalization: grid.meta.sum_before_normalization,
            params: grid.meta.params,
            step: grid.meta.step,
            hbar_eff: grid.meta.hbar_eff,
            overflow: grid.meta.overflow,
        }
    }
}

pub fn write_pgm<W: Write>(mut w: W, grid: &PhaseSpaceGrid) -> io::Result<()> {
    let (nx, np) = (grid.spec.x_bins, grid.spec.p_bins);
    write!(w, "P5\n{nx} {np}\n65535\n")?;
    let max = grid.values.iter().copied().fold(0.0, f64::max);
    let scale = if max > 0.0 { 65535.0 / max } else { 0.0 };
    for pj in (0..np).rev() {
        for xi in 0..nx {
            let level = (grid.get(xi, pj) * scale).round().clamp(0.0, 65535.0) as u16;
            w.write_all(&level.to_be_bytes())?;
        }
    }
    w.flush()
}

pub fn write_raw_values<W: Write>(mut w: W, values: &[f64]) -> io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

fn grid_paths(dir: &Path, stem: &str) -> [PathBuf; 3] {
    ["pgm", "json", "f64"].map(|ext| dir.join(format!("{stem}.{ext}")))
}

/// Writes the heatmap, sidecar and raw values; returns the three paths.
pub fn write_grid_files(dir: &Path, stem: &str, grid: &PhaseSpaceGrid) -> Result<Vec<PathBuf>> {
    let [pgm, json, raw] = grid_paths(dir, stem);
    write_pgm(BufWriter::new(fs::File::create(&pgm)?), grid)?;
    let mut sidecar = serde_json::to_string_pretty(&GridSidecar::of(grid))?;
    sidecar.push('\n');
    fs::write(&json, sidecar)?;
    write_raw_values(BufWriter::new(fs::File::create(&raw)?), &grid.values)?;
    Ok(vec![pgm, json, raw])
}

/// Reassembles a grid from its sidecar and raw values. `path` may name any
/// of the three files or the bare stem.
pub fn read_grid_files(path: &Path) -> Result<PhaseSpaceGrid> {
    let stem_path = path.with_extension("");
    let dir = stem_path.parent().unwrap_or(Path::new("."));
    let stem = stem_path
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Config(format!("bad grid path {}", path.display())))?;
    let [_, json, raw] = grid_paths(dir, stem);
    let side: GridSidecar = serde_json::from_slice(&fs::read(&json)?)?;
    let spec = GridSpec::new(side.x_bins, side.p_bins, side.p_min, side.p_max);
    spec.validate()?;
    let bytes = fs::read(&raw)?;
    if bytes.len() != 8 * spec.cells() {
        return Err(Error::Config(format!(
            "{}: expected {} values, found {} bytes",
            raw.display(),
            spec.cells(),
            bytes.len()
        )));
    }
    let values =
        bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok(PhaseSpaceGrid {
        spec,
        kind: side.kind,
        values,
        meta: GridMeta {
            params: side.params,
            step: side.step,
            hbar_eff: side.hbar_eff,
            overflow: side.overflow,
            sum_before_normalization: side.sum_before_normalization,
        },
    })
}
