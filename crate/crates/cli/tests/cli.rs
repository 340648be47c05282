use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn mhd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhd")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_lists_every_command() {
    let out = mhd(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for cmd in ["eos-check", "simulate", "relent", "dmv-audit", "kp-check", "--seed", "--threads", "--out"] {
        assert!(text.contains(cmd), "{cmd}");
    }
}

#[test]
fn simulate_output_is_independent_of_threads() {
    let cfg = config("relent_1d.json");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = mhd(&["simulate", path(&cfg), "--threads", "1", "--out", path(a.path())]);
    let rb = mhd(&["--threads", "4", "simulate", path(&cfg), "--out", path(b.path())]);
    assert!(ra.status.success() && rb.status.success());
    assert_eq!(ra.stdout, rb.stdout);
    let fa = files(a.path());
    assert!(fa.iter().any(|(n, _)| n == "time_series.csv"));
    assert!(fa.iter().any(|(n, _)| n == "snapshot_00000.txt"));
    assert_eq!(fa, files(b.path()));
}

#[test]
fn audit_exit_codes_follow_the_verdict() {
    let cfg = config("dmv_audit.json");
    let honest = mhd(&["dmv-audit", path(&cfg), "--ensemble", "2"]);
    assert!(honest.status.success(), "{}", String::from_utf8_lossy(&honest.stderr));
    assert_eq!(json(&honest)["audit"]["passed"], true);
    let faulty = mhd(&["dmv-audit", path(&cfg), "--ensemble", "2", "--fault", "flip-heating"]);
    assert_eq!(faulty.status.code(), Some(3));
    let stderr = String::from_utf8(faulty.stderr).unwrap();
    assert!(stderr.lines().any(|l| l.starts_with("entropy ") && l.contains("FAIL")), "{stderr}");
    let unknown = mhd(&["dmv-audit", path(&cfg), "--fault", "gremlins"]);
    assert_eq!(unknown.status.code(), Some(1));
}

#[test]
fn eos_check_marks_structural_clauses_not_applicable_for_the_ideal_gas() {
    let out = mhd(&["eos-check", path(&config("perfect_gas.json"))]);
    assert!(out.status.success());
    let rep = json(&out);
    assert_eq!(rep["structural_status"], "not applicable");
    assert_eq!(rep["passed"], true);
}

#[test]
fn relent_and_kp_check_emit_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = mhd(&["relent", path(&config("relent_1d.json")), "--out", path(dir.path())]);
    assert!(out.status.success());
    let rep = json(&out);
    assert_eq!(rep["reference"], "equilibrium");
    assert_eq!(rep["sweep"].as_array().unwrap().len(), 4);
    assert!(dir.path().join("relent_series.csv").exists() && dir.path().join("relent_sweep.csv").exists());

    let out = mhd(&["kp-check", path(&config("relent_1d.json")), "--sweep", "5"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["count"], 5);
}

#[test]
fn seed_override_changes_the_config_hash() {
    let cfg = config("relent_1d.json");
    let a = json(&mhd(&["kp-check", path(&cfg), "--sweep", "2"]));
    let b = json(&mhd(&["--seed", "9", "kp-check", path(&cfg), "--sweep", "2"]));
    assert_ne!(a["config_hash"], b["config_hash"]);
}

#[test]
fn errors_are_reported_with_context() {
    let out = mhd(&["simulate", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error: "));
    let out = mhd(&["relent", path(&config("relent_1d.json")), "--reference", "coarse"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(config("bounded_dmv.json")).unwrap()).unwrap();
    v["monitor"] = serde_json::json!({ "theta": [0.5, 1.02] });
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    let out = mhd(&["simulate", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error: bounded state: theta = ") && stderr.contains("at cell ("), "{stderr}");
}
