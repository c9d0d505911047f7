use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn frkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frkit")).args(args).output().expect("spawn frkit")
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn threshold_writes_exact_result() {
    let t = tempfile::tempdir().unwrap();
    let out = frkit(&["threshold", "--d", "2", "--alpha", "1", "--kappa", "0", "--out", t.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["summary"]["exact"]["p_star"], "4");
    let names: Vec<String> = listing(t.path()).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, ["provenance.json", "report.json", "run_config.toml", "threshold.json"]);
    let file: Value = serde_json::from_str(&fs::read_to_string(t.path().join("threshold.json")).unwrap()).unwrap();
    assert_eq!(file["regime"], "classical");
}

#[test]
fn rigid_threshold_is_infinite() {
    let t = tempfile::tempdir().unwrap();
    let out = frkit(&["threshold", "--d", "2", "--alpha", "1", "--kappa", "1/2", "--out", t.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["summary"]["regime"], "rigid");
}

#[test]
fn empty_verify_corpus_passes() {
    let t = tempfile::tempdir().unwrap();
    let out = frkit(&["verify", "--corpus", "", "--out", t.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(t.path().join("verify.json").exists());
}

#[test]
fn identical_runs_are_byte_identical() {
    // same directory both times: run_config.toml records it
    let t = tempfile::tempdir().unwrap();
    let dir = t.path().to_str().unwrap();
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let out = frkit(&["fr-ladder", "--measure", "circle", "--lo", "3", "--hi", "5", "--out", dir]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        snapshots.push(listing(t.path()));
    }
    assert!(snapshots[0].iter().any(|(n, _)| n == "ratio_series.csv"));
    for ((na, a), (nb, b)) in snapshots[0].iter().zip(&snapshots[1]) {
        assert_eq!(na, nb);
        assert!(a == b, "{na} differs");
    }
    assert_eq!(snapshots[0].len(), snapshots[1].len());
}

#[test]
fn written_config_reproduces_the_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let out = frkit(&["sweep-curve", "--d", "3", "--alpha", "2", "--points", "9", "--out", a.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let cfg = a.path().join("run_config.toml");
    let out = frkit(&["--config", cfg.to_str().unwrap(), "sweep-curve", "--out", b.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(a.path().join("sweep.csv")).unwrap(), fs::read(b.path().join("sweep.csv")).unwrap());
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("c.toml");
    fs::write(&cfg, "bogus = 1\n").unwrap();
    let out = frkit(&["--config", cfg.to_str().unwrap(), "threshold", "--out", t.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn invalid_input_is_a_usage_error() {
    let t = tempfile::tempdir().unwrap();
    let out = frkit(&["threshold", "--d", "2", "--alpha", "3", "--out", t.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_check_exits_one() {
    // any leakage at all exceeds a zero tolerance
    let t = tempfile::tempdir().unwrap();
    let out = frkit(&["torus-propagation", "--tol", "0", "--out", t.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], false);
    assert!(t.path().join("propagation.csv").exists());
}
