use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_diffraxis"));
    c.env_remove("DIFFRAXIS_SEED");
    c
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/three_peaks.xy")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

#[test]
fn analysis_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let plot = dir.path().join("r.tsv");
    let o = run(&[
        "--input",
        fixture().to_str().unwrap(),
        "--restarts",
        "40",
        "--hkl",
        "2,2,2@30.4",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--plot-data",
        plot.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = diffraxis::export::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r.peaks.len(), 3);
    assert_eq!(r.lattice.len(), 1);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("segment_id,"));
    assert!(std::fs::read_to_string(&plot).unwrap().starts_with("angle\tcounts\t"));
}

#[test]
fn stdout_is_deterministic_and_seed_comes_from_env() {
    let path = fixture();
    let args = ["--input", path.to_str().unwrap(), "--restarts", "20"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let with_flag = bin().args(args).args(["--seed", "17"]).output().unwrap();
    let with_env = bin().args(args).env("DIFFRAXIS_SEED", "17").output().unwrap();
    assert_eq!(with_flag.stdout, with_env.stdout);
    let v: serde_json::Value = serde_json::from_slice(&with_env.stdout).unwrap();
    assert_eq!(v["metadata"]["config"]["seed"], 17);
}

#[test]
fn parse_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.xy");
    std::fs::write(&bad, "10 1\n11 2\n10.5 3\n").unwrap();
    let o = run(&["--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert_eq!(run(&["--input", bad.to_str().unwrap(), "--alpha", "x"]).status.code(), Some(1));
    assert_eq!(run(&["--input", bad.to_str().unwrap(), "--hkl", "1,2"]).status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let spiky = dir.path().join("spiky.xy");
    let text: String = (0..400)
        .map(|i| {
            let y = 50.0 + 2000.0 * (-(((i as f64) - 200.0) / 3.0).powi(2)).exp() + ((i * 7919) % 13) as f64;
            format!("{} {y}\n", 20.0 + 0.01 * i as f64)
        })
        .collect();
    std::fs::write(&spiky, text).unwrap();
    // Weights growing by 1% per step cannot pull the spline through the
    // peak within the iteration cap.
    let o = run(&["--input", spiky.to_str().unwrap(), "--q-weights", "1.01"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("smoothing spline"));
}

#[test]
fn io_errors_exit_with_three() {
    let o = run(&["--input", "/nonexistent/scan.xy"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&[
        "--input",
        fixture().to_str().unwrap(),
        "--restarts",
        "5",
        "--out",
        "/nonexistent/dir/r.json",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn help_exits_cleanly() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("--q-squeeze"));
}
