//! `qratchet`: command-line runner for the dissipative kicked ratchet.
//!
//! Exit status: 0 on success, 2 for invalid input, 3 when a numerical
//! consistency check fails (basis leakage, norm or trace drift), 4 for I/O.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use qratchet_core::presets::{Figure, FIGURES};

use crate::commands::{Outcome, ScanArgs};
use crate::config::{resolve, Defaults, ExperimentConfig, ModelArgs, Resolved, RunArgs};
use crate::output::{Manifest, Staging};

/// Default root for output directories when `--out-dir` is not given.
const OUT_ROOT_ENV: &str = "QRATCHET_OUT_DIR";
const GRID_ENSEMBLE: usize = 1_000_000;

#[derive(Parser, Debug)]
#[command(name = "qratchet", version, about = "Classical and quantum dissipative ratchet experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// JSON experiment document (or a manifest from an earlier run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (default: `$QRATCHET_OUT_DIR/<command>-<preset>-seed<seed>`).
    #[arg(long = "out-dir", global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Replace a non-empty output directory.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Args, Debug, Clone, Default)]
struct Knobs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve a classical ensemble: current series and final Liouville grid.
    Classical {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Quantum jump trajectories: current series, optional state snapshots.
    Quantum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        knobs: Knobs,
        /// Fixed basis half-width instead of sizing from the momentum window.
        #[arg(long)]
        basis: Option<usize>,
        /// Steps at which to dump every trajectory's state.
        #[arg(long = "snapshot-steps", value_delimiter = ',')]
        snapshot_steps: Vec<usize>,
    },
    /// Husimi grid from a fresh quantum run or from snapshot files.
    Husimi {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long = "snapshots", num_args = 1..)]
        snapshots: Vec<PathBuf>,
    },
    /// Classical-quantum overlap, or the overlap of two grid files.
    Overlap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long, num_args = 2)]
        grids: Vec<PathBuf>,
    },
    /// Comparison report between classical and quantum runs, or between two
    /// quantum steady states (`--with`).
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long)]
        with: Option<String>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Attractor classification over a (gamma, K) lattice.
    Scan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long = "gamma-range", value_parser = parse_pair::<f64>)]
        gamma_range: Option<(f64, f64)>,
        #[arg(long = "k-range", value_parser = parse_pair::<f64>)]
        k_range: Option<(f64, f64)>,
        /// Lattice points `gamma,K`.
        #[arg(long, value_parser = parse_pair::<usize>)]
        resolution: Option<(usize, usize)>,
        #[arg(long)]
        transient: Option<usize>,
        #[arg(long)]
        probes: Option<usize>,
        /// Continue from an interrupted scan directory.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Regenerate the data behind a figure or the overlap table.
    Reproduce {
        /// fig1 | fig2 | fig3 | fig4 | overlap-table
        figure: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        knobs: Knobs,
    },
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> std::result::Result<(T, T), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected 'a,b', got '{s}'"))?;
    let parse = |v: &str| v.trim().parse::<T>().map_err(|_| format!("cannot parse '{v}'"));
    Ok((parse(a)?, parse(b)?))
}

fn resolve_common(common: &Common, knobs: &Knobs, defaults: &Defaults) -> Result<Resolved> {
    let doc = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    resolve(doc, common.preset.as_deref(), common.seed, &knobs.model, &knobs.run, defaults)
}

fn default_out_dir(command: &str, r: &Resolved) -> PathBuf {
    let root = std::env::var_os(OUT_ROOT_ENV).map_or_else(|| PathBuf::from("qratchet-runs"), PathBuf::from);
    let mut name = command.to_string();
    if let Some(p) = r.preset {
        name.push('-');
        name.push_str(p.name);
    }
    name.push_str(&format!("-seed{}", r.run.seed));
    root.join(name)
}

fn manifest(command: &str, r: &Resolved, settings: serde_json::Value, workers: Option<usize>) -> Manifest {
    Manifest {
        tool: "qratchet".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        preset: r.preset.map(|p| p.name.to_string()),
        seed: r.run.seed,
        config: r.config.clone(),
        settings,
        outputs: Vec::new(),
        wall_clock_seconds: 0.0,
        workers,
        available_parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
    }
}

fn finish(
    command: &str,
    common: &Common,
    r: &Resolved,
    started: Instant,
    outcome: Outcome,
) -> Result<PathBuf> {
    let target = common.out_dir.clone().unwrap_or_else(|| default_out_dir(command, r));
    let staging = Staging::create(&target, common.force)?;
    let settings = outcome.settings.clone();
    outcome.write(&staging)?;
    staging.commit(manifest(command, r, settings, workers(common, r)), started)
}

fn run(cli: Cli) -> Result<PathBuf> {
    let started = Instant::now();
    let standard = Defaults::default();
    let grids = Defaults { size: GRID_ENSEMBLE };
    match cli.command {
        Command::Classical { common, knobs } => {
            let r = resolve_common(&common, &knobs, &standard)?;
            let out = in_pool(&common, &r, || commands::classical(&r))?;
            finish("classical", &common, &r, started, out)
        }
        Command::Quantum { common, knobs, basis, snapshot_steps } => {
            let mut r = resolve_common(&common, &knobs, &standard)?;
            if basis.is_some() {
                r.config.basis = basis;
            }
            if !snapshot_steps.is_empty() {
                r.config.snapshot_steps = Some(snapshot_steps);
            }
            let out = in_pool(&common, &r, || commands::quantum(&r))?;
            finish("quantum", &common, &r, started, out)
        }
        Command::Husimi { common, knobs, snapshots } => {
            let r = resolve_for_files(&common, &knobs, &standard, !snapshots.is_empty())?;
            let out = in_pool(&common, &r, || commands::husimi(&r, &snapshots))?;
            finish("husimi", &common, &r, started, out)
        }
        Command::Overlap { common, knobs, grids: files } => {
            let r = resolve_for_files(&common, &knobs, &grids, !files.is_empty())?;
            let out = in_pool(&common, &r, || commands::overlap(&r, &files))?;
            finish("overlap", &common, &r, started, out)
        }
        Command::Compare { common, knobs, with, threshold } => {
            let mut r = resolve_common(&common, &knobs, &grids)?;
            if let Some(w) = with {
                r.config.compare_with = Some(qratchet_core::presets::preset(&w)?.name.to_string());
            }
            if threshold.is_some() {
                r.config.threshold = threshold;
            }
            let out = in_pool(&common, &r, || commands::compare(&r))?;
            finish("compare", &common, &r, started, out)
        }
        Command::Scan { common, knobs, gamma_range, k_range, resolution, transient, probes, resume } => {
            let r = resolve_common(&common, &knobs, &standard)?;
            let args = ScanArgs { gamma_range, k_range, resolution, transient, probes, resume };
            let spec = commands::scan_spec(&r, &args)?;
            let mut r = r;
            r.config.scan = Some(spec.clone());
            let target = common.out_dir.clone().unwrap_or_else(|| default_out_dir("scan", &r));
            let staging = Staging::create(&target, common.force)?;
            let settings = in_pool(&common, &r, || commands::scan(spec, args.resume.as_deref(), &staging))?;
            staging.commit(manifest("scan", &r, settings, workers(&common, &r)), started)
        }
        Command::Reproduce { figure, common, knobs } => {
            let figure: Figure = figure.parse()?;
            let defaults = match figure {
                Figure::Fig3 | Figure::Fig4 => standard,
                _ => grids,
            };
            let mut knobs = knobs;
            if knobs.run.steps.is_none() && common.config.is_none() {
                knobs.run.steps = Some(commands::default_steps(figure));
            }
            let mut r = resolve_for_files(&common, &knobs, &defaults, true)?;
            r.config.preset = None;
            r.preset = None;
            let out = in_pool(&common, &r, || commands::reproduce(&r, figure))?;
            finish(&format!("reproduce-{figure}"), &common, &r, started, out)
        }
    }
}

/// Commands that can work without model parameters fall back to a neutral
/// parameter set when none is given.
fn resolve_for_files(common: &Common, knobs: &Knobs, defaults: &Defaults, files: bool) -> Result<Resolved> {
    if files && common.preset.is_none() && common.config.is_none() && knobs.model.gamma.is_none() {
        let mut knobs = knobs.clone();
        knobs.model.gamma = Some(0.5);
        knobs.model.big_k = Some(knobs.model.big_k.unwrap_or(0.0));
        return resolve_common(common, &knobs, defaults);
    }
    resolve_common(common, knobs, defaults)
}

/// Worker count from the flag, else from the document's `worker_hint`.
fn workers(common: &Common, r: &Resolved) -> Option<usize> {
    common.workers.or(r.run.worker_hint)
}

fn in_pool<R: Send>(common: &Common, r: &Resolved, f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    qratchet_core::stats::with_workers(workers(common, r), f)
}

/// Maps an error chain to the documented exit status.
fn exit_status(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<qratchet_core::Error>() {
            return match e {
                qratchet_core::Error::Io(_) => 4,
                e if e.is_numerical() => 3,
                _ => 2,
            };
        }
        if cause.is::<std::io::Error>() {
            return 4;
        }
        if cause.is::<serde_json::Error>() {
            return 2;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.to_string().contains("unknown figure") {
                let names: Vec<&str> = FIGURES.iter().map(|f| f.name()).collect();
                eprintln!("registered figures: {}", names.join(", "));
            }
            ExitCode::from(exit_status(&err))
        }
    }
}
