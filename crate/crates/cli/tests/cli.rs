use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hubroute(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hubroute")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

#[test]
fn solve_prints_welfare_and_payment() {
    let out = hubroute(&["solve", fixture("two_clients_one_slot.txt").to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("W=6"), "{text}");
    assert!(text.contains("p_1=8"), "{text}");
}

#[test]
fn run_writes_metrics_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = hubroute(&["run", "--experiment", "truthfulness", "--seed", "3", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    for file in ["metrics.csv", "summary.txt", "manifest.txt"] {
        assert!(out_dir.join(file).is_file(), "{file} missing");
    }
    let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed = 3"), "{manifest}");
    assert!(manifest.contains("config_sha256"), "{manifest}");
}

#[test]
fn repeated_runs_give_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str| {
        let path = dir.path().join(name);
        let out = hubroute(&["run", "--experiment", "efficiency", "--seed", "1", "--out", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
        fs::read(path.join("metrics.csv")).unwrap()
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn unknown_experiment_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = hubroute(&["run", "--experiment", "nope", "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn validate_config_names_the_bad_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[router.predictor]\nlearning_rate = -1.0\n").unwrap();
    let out = hubroute(&["validate-config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("router.predictor.learning_rate"), "{}", stderr(&out));
}

#[test]
fn validate_config_accepts_shipped_default() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml");
    let out = hubroute(&["validate-config", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn gen_workload_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.jsonl");
    let out = hubroute(&["gen-workload", "--seed", "5", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let written = fs::read_to_string(&path).unwrap();
    // One line per turn: 40 dialogues of 8 turns.
    assert_eq!(written.lines().count(), 320);
    let again = hubroute(&["gen-workload", "--seed", "5"]);
    assert_eq!(stdout(&again), written);
    assert_ne!(stdout(&hubroute(&["gen-workload", "--seed", "6"])), written);
}
