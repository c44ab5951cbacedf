use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use timeshare::report::{RealizationReport, RewardReport, ShapleyReport};
use timeshare::{Incentive, Verdict};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_timeshare"))
        .args(args)
        .env_remove("TIMESHARE_SEED")
        .env_remove("TIMESHARE_THREADS")
        .output()
        .unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn two_party_game(dir: &TempDir) -> PathBuf {
    write(dir, "game.json", r#"{"n": 2, "values": {"1": 0.2, "2": 0.2, "1,2": 1.0}, "times": [4, 0]}"#)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn reward_report(out: &Output) -> RewardReport {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn naive_division_fails_strict_time_monotonicity() {
    let dir = TempDir::new().unwrap();
    let game = two_party_game(&dir);
    let out = run(&["rewards", "--game", s(&game), "--scheme", "naive"]);
    assert_eq!(out.status.code(), Some(2));
    let report = reward_report(&out);
    assert!((report.rewards[0] - 0.1).abs() < 1e-12);
    assert_eq!(report.incentive_report.verdict(Incentive::F2), Verdict::Fail);
}

#[test]
fn time_valuation_on_two_party_game() {
    let dir = TempDir::new().unwrap();
    let game = two_party_game(&dir);
    let out = run(&["rewards", "--game", s(&game), "--scheme", "timeval", "--gamma", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = reward_report(&out);
    for r in &report.rewards {
        assert!((r - 0.205495).abs() < 1e-6);
    }
    assert_eq!(report.times, vec![4, 0]);
}

#[test]
fn cumulation_on_two_party_game_plain_and_exact() {
    let dir = TempDir::new().unwrap();
    let game = two_party_game(&dir);
    for extra in [&[][..], &["--exact"][..]] {
        let mut args = vec!["rewards", "--game", s(&game), "--scheme", "cumulation", "--beta", "1"];
        args.extend_from_slice(extra);
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0));
        let report = reward_report(&out);
        assert!(report.rewards.iter().all(|r| (r - 0.26).abs() < 1e-12));
    }
}

#[test]
fn times_flag_overrides_the_game_file() {
    let dir = TempDir::new().unwrap();
    let game = two_party_game(&dir);
    let out = run(&["rewards", "--game", s(&game), "--times", "0,0", "--scheme", "cumulation", "--beta", "2"]);
    let report = reward_report(&out);
    assert_eq!(report.times, vec![0, 0]);
    assert!(report.rewards.iter().all(|r| (r - 0.5).abs() < 1e-12));
}

#[test]
fn shapley_exact_and_sampled() {
    let dir = TempDir::new().unwrap();
    let game = write(&dir, "nec.json", r#"{"n": 2, "values": {"1": 0, "2": 0, "1,2": 1}}"#);
    let out = run(&["shapley", "--game", s(&game)]);
    assert_eq!(out.status.code(), Some(0));
    let report: ShapleyReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.values, vec![0.5, 0.5]);
    let a = run(&["shapley", "--game", s(&game), "--permutations", "200", "--seed", "4"]);
    let b = run(&["shapley", "--game", s(&game), "--permutations", "200", "--seed", "4"]);
    assert_eq!(a.stdout, b.stdout);
    let report: ShapleyReport = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report.permutations, Some(200));
}

#[test]
fn check_reports_axioms_and_writes_out_file() {
    let dir = TempDir::new().unwrap();
    let game = two_party_game(&dir);
    let out_path = dir.path().join("check.json");
    let out = run(&["check", "--game", s(&game), "--scheme", "timeval", "--gamma", "1", "--out", s(&out_path)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["axioms"]["superadditive"], serde_json::Value::Bool(true));
}

#[test]
fn friedman_generation_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = run(&["gen", "friedman", "--count", "1000", "--seed", "1", "--out", s(p)]);
        assert_eq!(out.status.code(), Some(0));
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(text).unwrap().lines().count(), 1001);
}

#[test]
fn subset_realization_on_a_game_and_on_data() {
    let dir = TempDir::new().unwrap();
    let game = two_party_game(&dir);
    let out = run(&["realize", "subset", "--game", s(&game), "--targets", "0.2,1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: RealizationReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.parties[0].selected, Some(vec![1]));
    assert_eq!(report.parties[1].selected, Some(vec![2, 1]));
    assert!(report.parties[1].flags.contains(&"saturated".to_string()));

    let data = dir.path().join("d.csv");
    run(&["gen", "friedman", "--count", "40", "--seed", "2", "--sizes", "10,8", "--out", s(&data)]);
    let gp = write(
        &dir,
        "gp.json",
        r#"{"lengthscales": [0.4, 0.4, 0.4, 0.8, 0.8, 10], "signal_variance": 1, "noise_variance": 0.05}"#,
    );
    let temper = run(&["realize", "temper", "--data", s(&data), "--gp", s(&gp), "--targets", "100,100"]);
    assert_eq!(temper.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&temper.stderr).starts_with("error:"));
}

#[test]
fn rewards_feed_tempering() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("d.csv");
    run(&["gen", "friedman", "--count", "60", "--seed", "3", "--sizes", "12,10,8", "--out", s(&data)]);
    let gp = write(
        &dir,
        "gp.json",
        r#"{"lengthscales": [0.4, 0.4, 0.4, 0.8, 0.8, 10], "signal_variance": 1, "noise_variance": 0.05}"#,
    );
    let own = run(&["realize", "temper", "--data", s(&data), "--gp", s(&gp), "--targets", "0,0,0"]);
    assert_eq!(own.status.code(), Some(1), "targets below own value are out of range");
    let experiment = run(&[
        "experiment", "friedman", "--count", "60", "--sizes", "12,10,8", "--seed", "3", "--t1-grid", "0,2",
        "--betas", "1", "--gammas", "0.5",
    ]);
    assert!(matches!(experiment.status.code(), Some(0) | Some(2)));
    let doc: serde_json::Value = serde_json::from_slice(&experiment.stdout).unwrap();
    assert!(doc["rows"].as_array().unwrap().len() >= 12);
    let stderr = String::from_utf8_lossy(&experiment.stderr);
    assert!(stderr.lines().all(|l| l.starts_with("PASS ") || l.starts_with("FAIL ")));
}

#[test]
fn invalid_flag_combinations_are_rejected() {
    let dir = TempDir::new().unwrap();
    let game = two_party_game(&dir);
    for args in [
        &["rewards", "--game", s(&game), "--scheme", "timeval", "--beta", "2"][..],
        &["rewards", "--game", s(&game), "--scheme", "cumulation"][..],
        &["rewards", "--game", s(&game), "--scheme", "timeval", "--gamma", "1", "--exact"][..],
        &["rewards", "--game", s(&game), "--scheme", "naive", "--times", "1,2,3"][..],
        &["rewards", "--game", "/nonexistent/game.json", "--scheme", "naive"][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(run(&["rewards", "--scheme", "bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
