use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_twist-retarget");

fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

// A short two-scenario suite keeps the unoptimized binary quick.
const SMALL_CONFIG: &str = r#"{
  "scenario": [
    {"name": "short_turn", "segments": [{"phase": "approach", "duration": 0.6}, {"phase": "turn", "duration": 0.6}]},
    {"name": "short_ratchet", "seed": 4, "noise_sigma": 0.0005, "segments": [
      {"phase": "approach", "duration": 0.6}, {"phase": "turn", "duration": 0.4},
      {"phase": "release_and_rewind", "duration": 0.6, "rewind_deg": 24}, {"phase": "turn", "duration": 0.4}]}
  ]
}"#;

#[test]
fn generate_run_metrics_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, SMALL_CONFIG).unwrap();
    let (traj, gt, records) = (dir.path().join("t.jsonl"), dir.path().join("gt.csv"), dir.path().join("r.csv"));

    let out = cli(&["generate", "--config", p(&config), "--scenario", "short_ratchet", "--out", p(&traj), "--gt", p(&gt)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let lines = std::fs::read_to_string(&traj).unwrap().lines().count();
    assert_eq!(lines, 100);

    let out = cli(&["run", "--traj", p(&traj), "--method", "dextwist", "--config", p(&config), "--out", p(&records), "--gt", p(&gt)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let from_run: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let csv = std::fs::read_to_string(&records).unwrap();
    assert!(csv.starts_with("t,gate_active,theta_task_deg,theta_r_deg,theta_gt_deg,axis_dev_deg,J_total,J_rot,J_conn,J_axis,J_pos,q0,"));
    assert_eq!(csv.lines().count(), 101);

    let out = cli(&["metrics", "--records", p(&records), "--gt", p(&gt)]);
    assert_eq!(code(&out), 0);
    let from_file: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(from_run, from_file);
}

#[test]
fn compare_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, SMALL_CONFIG).unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let report = dir.path().join(format!("report{k}.json"));
        let csvs = dir.path().join(format!("records{k}"));
        let out = cli(&["compare", "--config", p(&config), "--methods", "dextwist,vector", "--report", p(&report), "--out-dir", p(&csvs)]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let mut files: Vec<_> = std::fs::read_dir(&csvs).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        let bytes: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
        outputs.push((std::fs::read(&report).unwrap(), files.len(), bytes));
    }
    assert_eq!(outputs[0].1, 4);
    assert_eq!(outputs[0], outputs[1]);
    let report: serde_json::Value = serde_json::from_slice(&outputs[0].0).unwrap();
    assert_eq!(report["scenario_digest"].as_str().unwrap().len(), 64);
    assert!(report["methods"]["dextwist"]["rmse"].is_number());
    assert_eq!(report["scenarios"].as_array().unwrap().len(), 2);
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"gate": {"d_on": 0.04, "hysteresis": 2}}"#).unwrap();
    let report = dir.path().join("r.json");
    let out = cli(&["compare", "--config", p(&bad), "--report", p(&report)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("hysteresis"));

    let traj = dir.path().join("t.jsonl");
    std::fs::write(&traj, "{\"t\":0.1,\"keypoints\":{\"wrist\":[0,0,0]}}\n").unwrap();
    let out = cli(&["run", "--traj", p(&traj), "--method", "vector", "--out", p(&dir.path().join("o.csv"))]);
    assert_eq!(code(&out), 1);

    let out = cli(&["run", "--traj", p(&traj), "--method", "spline", "--out", "o.csv"]);
    assert_eq!(code(&out), 1);
    assert_eq!(code(&cli(&["frobnicate"])), 1);
    assert_eq!(code(&cli(&["generate", "--out", p(&dir.path().join("x")), "--gt", p(&dir.path().join("y"))])), 1);
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["run", "--traj", p(&dir.path().join("missing.jsonl")), "--method", "vector", "--out", p(&dir.path().join("o.csv"))]);
    assert_eq!(code(&out), 2);

    // Ground truth that is never active leaves nothing to score.
    let gt = dir.path().join("gt.csv");
    std::fs::write(&gt, "t,theta_gt_deg,active\n0,0,0\n0.02,0,0\n").unwrap();
    let records = dir.path().join("r.csv");
    let mut csv = String::from("t,gate_active,theta_task_deg,theta_r_deg,theta_gt_deg,axis_dev_deg,J_total,J_rot,J_conn,J_axis,J_pos");
    for i in 0..16 {
        csv.push_str(&format!(",q{i}"));
    }
    csv.push('\n');
    for t in ["0", "0.02"] {
        csv.push_str(t);
        csv.push_str(",1,0,0,,0,0,0,0,0,0");
        csv.push_str(&",0".repeat(16));
        csv.push('\n');
    }
    std::fs::write(&records, csv).unwrap();
    let out = cli(&["metrics", "--records", p(&records), "--gt", p(&gt)]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_and_version_exit_with_zero() {
    assert_eq!(code(&cli(&["--help"])), 0);
    assert_eq!(code(&cli(&["--version"])), 0);
    assert_eq!(code(&cli(&["compare", "--help"])), 0);
}
