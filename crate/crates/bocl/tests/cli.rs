mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::snapshot;

fn bocl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bocl")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> serde_json::Value {
    let out = bocl(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (x, y) = (dir.path().join("x"), dir.path().join("y"));
    for d in [&x, &y] {
        ok(&["simulate", "--out", s(d), "--path", "circle", "--radius", "2", "--frames", "30", "--seed", "7"]);
    }
    assert_eq!(snapshot(&x), snapshot(&y));
}

#[test]
fn manifest_records_the_noise_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds");
    ok(&["simulate", "--out", s(&out), "--frames", "10", "--noise-pixel", "1.5", "--distractors", "1"]);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let text = manifest.to_string();
    assert!(text.contains("\"pixel_noise_sigma\":1.5"), "{text}");
    assert!(text.contains("\"distractor_rate\":1.0"), "{text}");
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.toml");
    fs::write(&cfg, "[trajectory]\nframes = 7\n\n[noise]\npixel_noise_sigma = 0.25\n").unwrap();
    let out = dir.path().join("ds");
    let v = ok(&["simulate", "--out", s(&out), "--frames", "20", "--config", s(&cfg)]);
    assert_eq!(v["report"]["frames"], 7);
    assert_eq!(v["config"]["noise"]["pixel_noise_sigma"], 0.25);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[noise]\npixel_sigma = 1.0\n").unwrap();
    let out = bocl(&["simulate", "--out", s(&dir.path().join("a")), "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pixel_sigma"));

    let ds = dir.path().join("ds");
    ok(&["simulate", "--out", s(&ds), "--frames", "5"]);
    let out = bocl(&["solve", "--dataset", s(&ds), "--out", s(&dir.path().join("o")), "--environment", "lava"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_dataset_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = bocl(&["solve", "--dataset", s(&dir.path().join("none")), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn zero_noise_pipeline_is_exact_and_leaves_the_dataset_alone() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, solved, eval) = (dir.path().join("ds"), dir.path().join("solve"), dir.path().join("eval"));
    ok(&["simulate", "--out", s(&ds), "--frames", "40", "--zero-noise", "--seed", "2"]);
    let before = snapshot(&ds);
    let v = ok(&["solve", "--dataset", s(&ds), "--out", s(&solved)]);
    assert_eq!(v["summary"]["solved"], 40);
    assert_eq!(snapshot(&ds), before);
    assert!(solved.join("audit.jsonl").exists() && solved.join("summary.json").exists());

    let traj = solved.join("trajectory.csv");
    let v = ok(&["evaluate", "--trajectory", s(&traj), "--truth", s(&ds), "--out", s(&eval)]);
    assert!(v["report"]["max_position_error"].as_f64().unwrap() < 1e-6);
    assert!(v["report"]["max_rotation_error"].as_f64().unwrap() < 1e-6);
    for f in ["errors.csv", "range_bins.csv", "error_vs_range.svg", "evaluation.json"] {
        assert!(eval.join(f).exists(), "{f}");
    }

    // Row order in the trajectory file does not change the report.
    let text = fs::read_to_string(&traj).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[1..].reverse();
    let shuffled = dir.path().join("shuffled.csv");
    fs::write(&shuffled, lines.join("\n") + "\n").unwrap();
    let eval2 = dir.path().join("eval2");
    let w = ok(&["evaluate", "--trajectory", s(&shuffled), "--truth", s(&ds), "--out", s(&eval2)]);
    assert_eq!(v["report"], w["report"]);
    assert_eq!(fs::read(eval.join("range_bins.csv")).unwrap(), fs::read(eval2.join("range_bins.csv")).unwrap());
}

#[test]
fn solve_refuses_to_write_into_the_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds");
    ok(&["simulate", "--out", s(&ds), "--frames", "5"]);
    let out = bocl(&["solve", "--dataset", s(&ds), "--out", s(&ds)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spacing_writes_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sp");
    let v = ok(&["spacing", "--out", s(&out), "--d", "0.57,0.88", "--ranges", "2,4", "--trials", "50"]);
    assert!(v.is_object());
    let csv = fs::read_to_string(out.join("spacing.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(fs::read_to_string(out.join("spacing.svg")).unwrap().starts_with("<svg"));
}
