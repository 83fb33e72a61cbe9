use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kcell(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kcell"));
    cmd.args(args).env_remove("SEED").env_remove("KCELL_WORKERS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const RATE: &str = r#"{
  "campaign_id": "rate",
  "experiment": "rate",
  "body": {"type": "ball", "center": [0, 0], "radius": 1},
  "dimension": 2,
  "n_grid": [16, 32, 64, 128],
  "reps": 60,
  "master_seed": 11
}"#;

fn lowerbound(inflate: f64) -> String {
    format!(
        r#"{{
  "campaign_id": "lb",
  "experiment": "lowerbound",
  "body": {{"type": "vpolytope", "vertices": [[-0.5,-0.5],[0.5,-0.5],[0.5,0.5],[-0.5,0.5]]}},
  "dimension": 2,
  "n_grid": [16, 64],
  "reps": 200,
  "master_seed": 5,
  "params": {{"inflate": {inflate}}}
}}"#
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_csv_summary_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "rate.json", RATE);
    let out_dir = dir.path().join("out");
    let out = kcell(&["run", s(&cfg), "--out", s(&out_dir)], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("rate.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "campaign_id,experiment,d,body,n,reps,mean_gap,stderr,trunc_count,seed");
    assert_eq!(lines.len(), 5);
    let svg = fs::read_to_string(out_dir.join("rate.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("fitted slope"));
}

#[test]
fn summary_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", RATE);
    let out_dir = dir.path().join("out");
    let out = kcell(&["run", s(&cfg), "--out", s(&out_dir)], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(out_dir.join("rate.json")).unwrap();
    assert!(text.contains("\"slope\"") && text.contains("\"checks\""));
}

#[test]
fn malformed_body_exits_2_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", &RATE.replace(r#""radius": 1"#, r#""radius": "big""#));
    let out = kcell(&["run", s(&cfg), "--out", s(dir.path())], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("body.radius"), "{err}");
}

#[test]
fn validation_lists_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let bad = RATE.replace("[16, 32, 64, 128]", "[16, 8]").replace(r#""reps": 60"#, r#""reps": 0"#);
    let cfg = write(dir.path(), "bad.json", &bad);
    let out = kcell(&["run", s(&cfg)], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for field in ["n_grid: must be strictly increasing", "n_grid: a rate fit", "reps:"] {
        assert!(err.contains(field), "{field} missing from {err}");
    }
    let missing = kcell(&["run", s(&dir.path().join("nope.json"))], &[]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn check_flag_reflects_lower_bound() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", &lowerbound(1.0));
    let out = kcell(&["run", s(&good), "--check", "--out", s(dir.path())], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let bad = write(dir.path(), "bad.json", &lowerbound(10.0));
    let out = kcell(&["run", s(&bad), "--check", "--out", s(dir.path())], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL lower_bound"));
    // Without --check the failure is reported but not fatal.
    let out = kcell(&["run", s(&bad), "--out", s(dir.path())], &[]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn replay_is_byte_identical_and_detects_changes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "rate.json", RATE);
    let out_dir = dir.path().join("out");
    assert_eq!(kcell(&["run", s(&cfg), "--out", s(&out_dir)], &[]).status.code(), Some(0));
    let csv = out_dir.join("rate.csv");
    assert_eq!(kcell(&["replay", s(&csv), s(&cfg)], &[]).status.code(), Some(0));
    assert_eq!(kcell(&["replay", s(&csv), s(&cfg)], &[("KCELL_WORKERS", "4")]).status.code(), Some(0));
    assert_eq!(kcell(&["replay", s(&csv), s(&cfg), "--workers", "3"], &[]).status.code(), Some(0));
    let changed = kcell(&["replay", s(&csv), s(&cfg)], &[("SEED", "12")]);
    assert_eq!(changed.status.code(), Some(1));
    let err = String::from_utf8_lossy(&changed.stderr);
    assert!(err.contains("differs at line 2"), "{err}");
    let bad_seed = kcell(&["replay", s(&csv), s(&cfg)], &[("SEED", "x")]);
    assert_eq!(bad_seed.status.code(), Some(2));
}
