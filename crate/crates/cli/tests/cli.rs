use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qratchet_core::io::read_current_csv;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qratchet")).args(args).output().unwrap()
}

fn sha256_file(path: &Path) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(fs::read(path).unwrap()).iter().map(|b| format!("{b:02x}")).collect()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn b1_classical_current_and_manifest_digests() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("b1");
    let o = run(&[
        "classical",
        "--preset",
        "B1",
        "--steps",
        "200",
        "--size",
        "10000",
        "--seed",
        "7",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (j, se) = read_current_csv(fs::File::open(out.join("J.csv")).unwrap()).unwrap();
    assert_eq!(j.len(), 201);
    assert!(se.is_empty());
    let target = 2.0 * std::f64::consts::PI;
    assert!((j[200] - target).abs() < 0.02 * target, "J(200) = {}", j[200]);

    let m = manifest(&out);
    assert_eq!(m["seed"], 7);
    assert_eq!(m["preset"], "B1");
    let outputs = m["outputs"].as_array().unwrap();
    assert!(outputs.iter().any(|e| e["path"] == "J.csv"));
    for e in outputs {
        let path = out.join(e["path"].as_str().unwrap());
        assert_eq!(e["sha256"].as_str().unwrap(), sha256_file(&path));
    }
}

#[test]
fn invalid_parameters_exit_2_without_output() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("bad");
    let o = run(&["classical", "--gamma", "1.5", "--kick", "3", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma"));
    assert_eq!(fs::read_dir(root.path()).unwrap().count(), 0);
}

#[test]
fn unknown_preset_lists_the_known_ones() {
    let root = tempfile::tempdir().unwrap();
    let o = run(&["classical", "--preset", "Z9", "--out-dir", root.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    for name in ["B1", "C-1", "D-1", "A"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn unknown_figure_is_a_usage_error() {
    let o = run(&["reproduce", "fig9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fig1"));
}

#[test]
fn manifest_rerun_reproduces_artifacts() {
    let root = tempfile::tempdir().unwrap();
    let first = root.path().join("first");
    let o = run(&[
        "classical",
        "--preset",
        "D-1",
        "--thermal",
        "--steps",
        "20",
        "--size",
        "5000",
        "--bins",
        "32",
        "--seed",
        "3",
        "--out-dir",
        first.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let second = root.path().join("second");
    let config = first.join("manifest.json");
    let o = run(&["classical", "--config", config.to_str().unwrap(), "--out-dir", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (a, b) = (manifest(&first), manifest(&second));
    assert_eq!(a["config"], b["config"]);
    assert_eq!(a["outputs"], b["outputs"]);
}

#[test]
fn worker_count_does_not_change_results() {
    let root = tempfile::tempdir().unwrap();
    let mut digests = Vec::new();
    for workers in ["1", "2", "8"] {
        let out = root.path().join(workers);
        let o = run(&[
            "quantum",
            "--preset",
            "B1",
            "--steps",
            "10",
            "--trajectories",
            "24",
            "--workers",
            workers,
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        digests.push(sha256_file(&out.join("J.csv")));
    }
    assert!(digests.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn basis_leakage_exits_3() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("leak");
    let o = run(&[
        "quantum",
        "--preset",
        "B1",
        "--basis",
        "20",
        "--steps",
        "5",
        "--trajectories",
        "4",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.exists());
}

#[test]
fn existing_output_directory_exits_4() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("taken");
    fs::create_dir(&out).unwrap();
    fs::write(out.join("keep.txt"), b"x").unwrap();
    let args =
        ["classical", "--preset", "B1", "--steps", "3", "--size", "100", "--out-dir", out.to_str().unwrap()];
    let o = run(&args);
    assert_eq!(o.status.code(), Some(4));
    assert!(out.join("keep.txt").exists());

    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(run(&forced).status.success());
    assert!(!out.join("keep.txt").exists());
    assert!(out.join("J.csv").exists());
}

#[test]
fn husimi_from_saved_snapshots_and_grid_overlap() {
    let root = tempfile::tempdir().unwrap();
    let q = root.path().join("q");
    let o = run(&[
        "quantum",
        "--preset",
        "C-1",
        "--steps",
        "4",
        "--trajectories",
        "6",
        "--snapshot-steps",
        "4",
        "--out-dir",
        q.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let snap = q.join("snapshots/step-4.bin");
    assert!(snap.exists());

    let h = root.path().join("h");
    let o = run(&[
        "husimi",
        "--preset",
        "C-1",
        "--bins",
        "32",
        "--out-dir",
        h.to_str().unwrap(),
        "--snapshots",
        snap.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let c = root.path().join("c");
    let o = run(&[
        "classical",
        "--preset",
        "C-1",
        "--steps",
        "4",
        "--size",
        "2000",
        "--bins",
        "32",
        "--out-dir",
        c.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let ov = root.path().join("ov");
    let o = run(&[
        "overlap",
        "--grids",
        c.join("liouville.json").to_str().unwrap(),
        h.join("husimi.json").to_str().unwrap(),
        "--out-dir",
        ov.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&fs::read(ov.join("report.json")).unwrap()).unwrap();
    let value = report["overlap"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&value), "{value}");
}

#[test]
fn interrupted_scan_resumes_to_the_same_table() {
    let root = tempfile::tempdir().unwrap();
    let scan = |out: &Path, extra: &[&str]| {
        let mut args = vec![
            "scan",
            "--preset",
            "B1",
            "--gamma-range",
            "0.2,0.4",
            "--k-range",
            "5,7",
            "--resolution",
            "3,2",
            "--transient",
            "50",
            "--probes",
            "8",
            "--out-dir",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        let o = run(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    let full = root.path().join("full");
    scan(&full, &[]);
    let table = fs::read_to_string(full.join("scan.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 6);

    let resumed = root.path().join("resumed");
    scan(&resumed, &["--resume", full.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(resumed.join("scan.csv")).unwrap(), table);
}
