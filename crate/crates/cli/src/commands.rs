//! Subcommand pipelines. Every command computes first and only then stages
//! its artifacts, so a failed run leaves no files behind.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use qratchet_core::classical::{scan_parameter_space, ClassifyOptions, ScanCheckpoint, ScanSpec};
use qratchet_core::io::{
    read_grid_files, read_snapshot, scan_csv_row, write_current_csv, write_current_se_csv, write_grid_files,
    write_snapshot, SCAN_HEADER,
};
use qratchet_core::phase_space::{
    comparison_report, husimi_grid, overlap_measure, CoherentFrame, OverlapMode, PhaseSpaceGrid, RunSide,
    SIMILARITY_THRESHOLD,
};
use qratchet_core::pipeline::{
    classical_run, overlap_entry, quantum_comparison, quantum_run, ClassicalRun, OverlapEntry, QuantumRun,
};
use qratchet_core::presets::{preset, Figure, Preset, HBAR_COARSE, HBAR_DEFAULT, HBAR_FINE};
use qratchet_core::quantum::{run_trajectory_ensemble, BasisSize, QuantumRunConfig};
use qratchet_core::stats::{settle_band, settle_time};
use qratchet_core::{ModelParams, Usage};
use serde::Serialize;
use serde_json::json;

use crate::config::Resolved;
use crate::output::Staging;

/// Everything a command produced, staged lazily by `write`.
pub struct Outcome {
    pub settings: serde_json::Value,
    files: Vec<Artifact>,
}

enum Artifact {
    Bytes(String, Vec<u8>),
    Grid(String, PhaseSpaceGrid),
}

impl Outcome {
    pub fn new(settings: serde_json::Value) -> Self {
        Outcome { settings, files: Vec::new() }
    }

    fn bytes(&mut self, rel: impl Into<String>, data: Vec<u8>) {
        self.files.push(Artifact::Bytes(rel.into(), data));
    }

    fn json<T: Serialize>(&mut self, rel: impl Into<String>, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.bytes(rel, text.into_bytes());
        Ok(())
    }

    fn current(&mut self, rel: impl Into<String>, values: &[f64]) {
        let mut buf = Vec::new();
        write_current_csv(&mut buf, values).expect("in-memory write");
        self.bytes(rel, buf);
    }

    fn current_se(&mut self, rel: impl Into<String>, values: &[f64], se: &[f64]) {
        let mut buf = Vec::new();
        write_current_se_csv(&mut buf, values, se).expect("in-memory write");
        self.bytes(rel, buf);
    }

    fn grid(&mut self, stem: impl Into<String>, grid: PhaseSpaceGrid) {
        self.files.push(Artifact::Grid(stem.into(), grid));
    }

    pub fn write(self, staging: &Staging) -> Result<()> {
        for a in self.files {
            match a {
                Artifact::Bytes(rel, data) => staging.write(&rel, &data)?,
                Artifact::Grid(stem, grid) => {
                    let p = staging.path(&stem)?;
                    let dir = p.parent().expect("staged path has a parent");
                    let name = p.file_name().expect("grid stem").to_string_lossy();
                    write_grid_files(dir, &name, &grid)?;
                }
            }
        }
        Ok(())
    }
}

fn target_of(preset: Option<&Preset>, params: &ModelParams) -> Option<f64> {
    if params.temperature > 0.0 {
        return None;
    }
    preset.and_then(|p| p.target_current())
}

#[derive(Serialize)]
struct ClassicalSummary {
    final_current: f64,
    final_std_err: f64,
    target_current: Option<f64>,
    settle_time: Option<usize>,
    overflow: usize,
}

fn classical_summary(run: &ClassicalRun, target: Option<f64>) -> ClassicalSummary {
    let s = &run.series;
    ClassicalSummary {
        final_current: s.last().unwrap_or(f64::NAN),
        final_std_err: s.std_err.last().copied().unwrap_or(f64::NAN),
        target_current: target,
        settle_time: target.and_then(|t| settle_time(&s.values, t, settle_band(t))),
        overflow: run.grid.as_ref().map_or(0, |g| g.meta.overflow),
    }
}

pub fn classical(r: &Resolved) -> Result<Outcome> {
    r.params.validate(Usage::Classical)?;
    let run = classical_run(&r.params, r.run.ensemble_size, r.run.steps, r.run.seed, Some(r.run.grid))?;
    let mut out = Outcome::new(json!({}));
    out.current("J.csv", &run.series.values);
    out.json("summary.json", &classical_summary(&run, target_of(r.preset, &r.params)))?;
    out.grid("liouville", run.grid.expect("grid requested"));
    Ok(out)
}

pub fn quantum(r: &Resolved) -> Result<Outcome> {
    r.params.validate(Usage::Quantum)?;
    let p_max = r.run.grid.p_max.abs().max(r.run.grid.p_min.abs());
    let basis = r.config.basis.map_or(BasisSize::Auto { p_max }, BasisSize::Fixed);
    let snapshot_steps = r.config.snapshot_steps.clone().unwrap_or_default();
    let cfg = QuantumRunConfig::new(r.run.trajectories, r.run.steps, r.run.seed, basis)
        .with_snapshots(snapshot_steps);
    let stats = run_trajectory_ensemble(&r.params, &cfg)?;
    let mut out = Outcome::new(json!({ "basis": basis }));
    out.current_se("J.csv", &stats.mean_p, &stats.std_err);
    out.json(
        "summary.json",
        &json!({
            "half_width": stats.half_width,
            "trajectories": stats.trajectories,
            "final_current": stats.mean_p.last(),
            "final_std_err": stats.std_err.last(),
            "mean_jumps_per_step": stats.mean_jumps_per_step,
            "max_leakage": stats.max_leakage,
        }),
    )?;
    for snap in &stats.snapshots {
        let mut buf = Vec::new();
        for s in &snap.states {
            write_snapshot(&mut buf, s, stats.hbar_eff, snap.step)?;
        }
        out.bytes(format!("snapshots/step-{}.bin", snap.step), buf);
    }
    Ok(out)
}

/// Reads every record of one or more snapshot files.
fn read_snapshot_files(
    paths: &[PathBuf],
) -> Result<(Vec<qratchet_core::quantum::MomentumState>, f64, usize)> {
    let mut states = Vec::new();
    let mut meta: Option<(f64, usize)> = None;
    for path in paths {
        let len = fs::metadata(path).with_context(|| format!("reading {}", path.display()))?.len();
        let mut reader = BufReader::new(fs::File::open(path)?);
        let mut consumed = 0u64;
        while consumed < len {
            let (s, hbar, step) = read_snapshot(&mut reader)
                .with_context(|| format!("reading snapshot record from {}", path.display()))?;
            consumed += 24 + 16 * s.dim() as u64;
            match meta {
                None => meta = Some((hbar, step)),
                Some((h, _)) if h != hbar => {
                    return Err(qratchet_core::Error::SnapshotMismatch(format!(
                        "hbar_eff {hbar} differs from {h}"
                    ))
                    .into())
                }
                _ => {}
            }
            states.push(s);
        }
    }
    let (hbar, step) = meta.ok_or_else(|| anyhow!(qratchet_core::Error::EmptyEnsemble))?;
    Ok((states, hbar, step))
}

pub fn husimi(r: &Resolved, snapshots: &[PathBuf]) -> Result<Outcome> {
    let mut out = Outcome::new(json!({ "snapshot_files": snapshots }));
    if snapshots.is_empty() {
        r.params.validate(Usage::Quantum)?;
        let run = quantum_run(&r.params, r.run.trajectories, r.run.steps, r.run.seed, r.run.grid, true)?;
        out.current_se("J.csv", &run.stats.mean_p, &run.stats.std_err);
        out.grid("husimi", run.husimi.expect("husimi requested"));
    } else {
        let (states, hbar, step) = read_snapshot_files(snapshots)?;
        let mut g = husimi_grid(&states, r.run.grid, &CoherentFrame::new(hbar)?)?;
        g.meta.step = Some(step);
        out.grid("husimi", g);
    }
    Ok(out)
}

pub fn overlap(r: &Resolved, grids: &[PathBuf]) -> Result<Outcome> {
    if let [a, b] = grids {
        let l = read_grid_files(a)?;
        let h = read_grid_files(b)?;
        let mut out = Outcome::new(json!({ "grids": grids }));
        out.json(
            "report.json",
            &json!({
                "overlap": overlap_measure(&l, &h, OverlapMode::Normalized)?,
                "overlap_raw": overlap_measure(&l, &h, OverlapMode::Raw)?,
            }),
        )?;
        return Ok(out);
    }
    r.params.validate(Usage::Classical)?;
    let qp = r.params.with_temperature(0.0);
    qp.validate(Usage::Quantum)?;
    let c = classical_run(&r.params, r.run.ensemble_size, r.run.steps, r.run.seed, Some(r.run.grid))?;
    let q = quantum_run(&qp, r.run.trajectories, r.run.steps, r.run.seed, r.run.grid, true)?;
    let label = r.preset.map_or("custom", |p| p.name);
    let entry = overlap_entry(label, &c, &q, r.params.temperature)?;
    let mut out = Outcome::new(json!({}));
    out.json("report.json", &entry)?;
    out.current("J_classical.csv", &c.series.values);
    out.current_se("J_quantum.csv", &q.stats.mean_p, &q.stats.std_err);
    out.grid("liouville", c.grid.expect("grid requested"));
    out.grid("husimi", q.husimi.expect("husimi requested"));
    Ok(out)
}

pub fn compare(r: &Resolved) -> Result<Outcome> {
    let threshold = r.config.threshold.unwrap_or(SIMILARITY_THRESHOLD);
    let with = r.config.compare_with.clone();
    let label = r.preset.map_or("custom", |p| p.name);
    let qp = r.params.with_temperature(0.0);
    qp.validate(Usage::Quantum)?;
    let steps = r.run.steps;
    match with {
        Some(name) => {
            let other = preset(&name)?;
            let op = other.params(qp.hbar_eff);
            let first = quantum_run(&qp, r.run.trajectories, steps, r.run.seed, r.run.grid, true)?;
            let second =
                quantum_run(&op, r.run.trajectories, steps, r.run.seed.wrapping_add(1), r.run.grid, true)?;
            let report = quantum_comparison((label, &first), (other.name, &second), threshold)?;
            let mut out = Outcome::new(json!({ "with": other.name, "sides": ["quantum", "quantum"] }));
            out.json("report.json", &report)?;
            out.current_se("J_first.csv", &first.stats.mean_p, &first.stats.std_err);
            out.current_se("J_second.csv", &second.stats.mean_p, &second.stats.std_err);
            out.grid("husimi_first", first.husimi.expect("husimi requested"));
            out.grid("husimi_second", second.husimi.expect("husimi requested"));
            Ok(out)
        }
        None => {
            r.params.validate(Usage::Classical)?;
            let c = classical_run(&r.params, r.run.ensemble_size, steps, r.run.seed, Some(r.run.grid))?;
            let q = quantum_run(&qp, r.run.trajectories, steps, r.run.seed, r.run.grid, true)?;
            let report = comparison_report(
                &RunSide {
                    label: format!("{label} classical"),
                    grid: c.grid.clone().expect("grid requested"),
                    current: c.series.values.clone(),
                },
                &RunSide {
                    label: format!("{label} quantum"),
                    grid: q.husimi.clone().expect("husimi requested"),
                    current: q.stats.mean_p.clone(),
                },
                threshold,
            )?;
            let mut out = Outcome::new(json!({ "sides": ["classical", "quantum"] }));
            out.json("report.json", &report)?;
            out.current("J_classical.csv", &c.series.values);
            out.current_se("J_quantum.csv", &q.stats.mean_p, &q.stats.std_err);
            out.grid("liouville", c.grid.expect("grid requested"));
            out.grid("husimi", q.husimi.expect("husimi requested"));
            Ok(out)
        }
    }
}

pub struct ScanArgs {
    pub gamma_range: Option<(f64, f64)>,
    pub k_range: Option<(f64, f64)>,
    pub resolution: Option<(usize, usize)>,
    pub transient: Option<usize>,
    pub probes: Option<usize>,
    pub resume: Option<PathBuf>,
}

pub fn scan_spec(r: &Resolved, a: &ScanArgs) -> Result<ScanSpec> {
    let mut spec = r.config.scan.clone().unwrap_or(ScanSpec {
        gamma_range: (0.05, 0.95),
        k_range: (0.0, 12.0),
        resolution: (32, 32),
        base: r.params,
        classify: ClassifyOptions { seed: r.run.seed, ..ClassifyOptions::default() },
    });
    if r.config.scan.is_none() || r.config.params.is_some() {
        spec.base = ModelParams { temperature: 0.0, ..r.params };
    }
    if let Some(v) = a.gamma_range {
        spec.gamma_range = v;
    }
    if let Some(v) = a.k_range {
        spec.k_range = v;
    }
    if let Some(v) = a.resolution {
        spec.resolution = v;
    }
    if let Some(v) = a.transient {
        spec.classify.transient = v;
    }
    if let Some(v) = a.probes {
        spec.classify.probes = v;
    }
    spec.validate()?;
    if spec.base.temperature != 0.0 {
        return Err(qratchet_core::Error::Config("scans classify the T = 0 map".into()).into());
    }
    Ok(spec)
}

/// Scans write straight into the staging directory row by row, so an
/// interrupted scan leaves a resumable checkpoint behind.
pub fn scan(spec: ScanSpec, resume: Option<&Path>, staging: &Staging) -> Result<serde_json::Value> {
    let (start, mut csv_text) = match resume {
        Some(dir) => {
            let ckpt: ScanCheckpoint = serde_json::from_slice(
                &fs::read(dir.join("checkpoint.json")).context("reading checkpoint")?,
            )?;
            if ckpt.spec != spec {
                return Err(qratchet_core::Error::Config(
                    "checkpoint was written for a different scan".into(),
                )
                .into());
            }
            let text = fs::read_to_string(dir.join("scan.csv"))?;
            let rows_kept = 1 + ckpt.completed_rows * spec.resolution.0;
            let kept: Vec<&str> = text.lines().take(rows_kept).collect();
            (ckpt, kept.join("\n") + "\n")
        }
        None => (ScanCheckpoint::fresh(spec), format!("{SCAN_HEADER}\n")),
    };
    let csv_path = staging.path("scan.csv")?;
    let ckpt_path = staging.path("checkpoint.json")?;
    fs::write(&csv_path, &csv_text)?;
    fs::write(&ckpt_path, serde_json::to_string_pretty(&start)? + "\n")?;
    let done = scan_parameter_space(start, |_, cells, ckpt| {
        for c in cells {
            csv_text.push_str(&scan_csv_row(c));
            csv_text.push('\n');
        }
        let io = || -> std::io::Result<()> {
            let mut f = BufWriter::new(fs::File::create(&csv_path)?);
            f.write_all(csv_text.as_bytes())?;
            f.flush()?;
            fs::write(&ckpt_path, serde_json::to_string_pretty(ckpt).expect("checkpoint serializes") + "\n")
        };
        io().map_err(qratchet_core::Error::Io)
    })?;
    Ok(json!({ "rows": done.completed_rows, "failed_cells": done.diagnostics.len(), "resumed_from": resume }))
}

#[derive(Serialize)]
struct TableRow {
    case: String,
    #[serde(flatten)]
    entry: OverlapEntry,
}

#[derive(Serialize)]
struct OverlapTable {
    /// The eight overlap values in table order.
    overlaps: Vec<OverlapValue>,
    classical_vs_quantum: Vec<TableRow>,
    quantum_pair: ComparisonSummary,
}

#[derive(Serialize)]
struct OverlapValue {
    case: String,
    overlap: f64,
}

#[derive(Serialize)]
struct ComparisonSummary {
    case: String,
    overlap: f64,
    overlap_raw: f64,
    threshold: f64,
    similar: bool,
    first_current: f64,
    second_current: f64,
}

fn thermal(p: &Preset, hbar: f64) -> ModelParams {
    p.thermal_params(hbar).unwrap_or_else(|| p.params(hbar))
}

pub fn reproduce(r: &Resolved, figure: Figure) -> Result<Outcome> {
    let (size, traj, seed) = (r.run.ensemble_size, r.run.trajectories, r.run.seed);
    let steps = r.run.steps;
    let bins = r.run.grid.x_bins;
    let b1 = preset("B1")?;
    let c1 = preset("C-1")?;
    let d1 = preset("D-1")?;
    let a = preset("A")?;
    let mut out = Outcome::new(json!({
        "figure": figure,
        "ensemble_size": size,
        "trajectories": traj,
        "steps": steps,
        "bins": bins,
    }));
    match figure {
        Figure::Fig1 => {
            for p in [b1, c1, d1] {
                let spec = p.grid(bins);
                let cold = classical_run(&p.params(HBAR_DEFAULT), size, steps, seed, Some(spec))?;
                let warm = classical_run(&thermal(p, HBAR_DEFAULT), size, steps, seed, Some(spec))?;
                let q = quantum_run(&p.params(HBAR_DEFAULT), traj, steps, seed, spec, true)?;
                out.grid(format!("{}/liouville_T0", p.name), cold.grid.expect("grid"));
                out.grid(format!("{}/liouville_T", p.name), warm.grid.expect("grid"));
                out.grid(format!("{}/husimi", p.name), q.husimi.expect("husimi"));
            }
        }
        Figure::Fig2 => {
            let q = quantum_run(&b1.params(HBAR_COARSE), traj, steps, seed, b1.grid(bins), true)?;
            out.grid("B1_coarse/husimi", q.husimi.expect("husimi"));
            let q = quantum_run(&d1.params(HBAR_FINE), traj, steps, seed, d1.grid(bins), true)?;
            out.grid("D-1_fine/husimi", q.husimi.expect("husimi"));
            let c = classical_run(&a.params(HBAR_DEFAULT), size, steps, seed, Some(a.grid(bins)))?;
            out.grid("A/liouville_T0", c.grid.expect("grid"));
            let q = quantum_run(&a.params(HBAR_DEFAULT), traj, steps, seed, a.grid(bins), true)?;
            out.grid("A/husimi", q.husimi.expect("husimi"));
        }
        Figure::Fig3 | Figure::Fig4 => {
            let list: &[&Preset] = if figure == Figure::Fig3 { &[b1, c1] } else { &[d1, a] };
            for p in list {
                let cold = classical_run(&p.params(HBAR_DEFAULT), size, steps, seed, None)?;
                out.current(format!("{}/classical_T0.csv", p.name), &cold.series.values);
                if let Some(tp) = p.thermal_params(HBAR_DEFAULT) {
                    let warm = classical_run(&tp, size, steps, seed, None)?;
                    out.current(format!("{}/classical_T.csv", p.name), &warm.series.values);
                }
                let q = quantum_run(&p.params(HBAR_DEFAULT), traj, steps, seed, p.grid(bins), false)?;
                out.current_se(format!("{}/quantum.csv", p.name), &q.stats.mean_p, &q.stats.std_err);
            }
        }
        Figure::OverlapTable => {
            let mut rows = Vec::new();
            let mut quantum: Vec<QuantumRun> = Vec::new();
            for p in [b1, c1, d1, a] {
                let spec = p.grid(bins);
                let q = quantum_run(&p.params(HBAR_DEFAULT), traj, steps, seed, spec, true)?;
                let mut temps = vec![0.0];
                temps.extend(p.temperature);
                for t in temps {
                    let c = classical_run(
                        &p.params(HBAR_DEFAULT).with_temperature(t),
                        size,
                        steps,
                        seed,
                        Some(spec),
                    )?;
                    let case = if t == 0.0 { format!("{} T=0", p.name) } else { format!("{} T={t}", p.name) };
                    rows.push(TableRow { case, entry: overlap_entry(p.name, &c, &q, t)? });
                }
                quantum.push(q);
            }
            let (dq, aq) = (&quantum[2], &quantum[3]);
            let report = quantum_comparison(("D-1", dq), ("A", aq), SIMILARITY_THRESHOLD)?;
            let pair = ComparisonSummary {
                case: "D-1 quantum vs A quantum".into(),
                overlap: report.overlap,
                overlap_raw: report.overlap_raw,
                threshold: report.threshold,
                similar: report.similar,
                first_current: report.first.current.last().copied().unwrap_or(f64::NAN),
                second_current: report.second.current.last().copied().unwrap_or(f64::NAN),
            };
            let mut overlaps: Vec<OverlapValue> = rows
                .iter()
                .map(|r| OverlapValue { case: r.case.clone(), overlap: r.entry.overlap })
                .collect();
            overlaps.push(OverlapValue { case: pair.case.clone(), overlap: pair.overlap });
            let table = OverlapTable { overlaps, classical_vs_quantum: rows, quantum_pair: pair };
            out.json("overlap_table.json", &table)?;
        }
    }
    Ok(out)
}

/// Step count of a figure when neither flags nor config set one.
pub fn default_steps(figure: Figure) -> usize {
    match figure {
        Figure::Fig3 | Figure::Fig4 => 200,
        _ => 50,
    }
}
