use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bnsample"))
}

fn net4() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/net4.toml")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn gen(dir: &TempDir, rows: &str, seed: &str) -> PathBuf {
    let data = dir.path().join("data.csv");
    ok(bin()
        .args(["gen", "--network"])
        .arg(net4())
        .args(["--rows", rows, "--seed", seed, "--out"])
        .arg(&data)
        .output()
        .unwrap());
    data
}

#[test]
fn gen_is_deterministic_and_versioned() {
    let dir = TempDir::new().unwrap();
    let a = fs::read_to_string(gen(&dir, "50", "4")).unwrap();
    let b = fs::read_to_string(gen(&dir, "50", "4")).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with("# format=1\nA,B,C,D\n"));
    assert_eq!(a.lines().count(), 52);
}

#[test]
fn random_network_generation() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("r.csv");
    let net = dir.path().join("r.toml");
    let arity = dir.path().join("r.arity");
    ok(bin()
        .args(["gen", "--random-nodes", "5", "--random-arity", "3", "--rows", "30", "--out"])
        .arg(&data)
        .arg("--network-out")
        .arg(&net)
        .arg("--arity-out")
        .arg(&arity)
        .output()
        .unwrap());
    assert!(fs::read_to_string(&net).unwrap().starts_with("# format=1"));
    assert!(fs::read_to_string(&arity).unwrap().contains("X4 3"));
}

#[test]
fn sample_tracks_exact_posterior() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "200", "1");
    let exact = dir.path().join("exact.csv");
    ok(bin().args(["exact", "--data"]).arg(&data).arg("--out").arg(&exact).output().unwrap());
    let est = dir.path().join("est.csv");
    let trace = dir.path().join("trace.jsonl");
    let summary = ok(bin()
        .args(["sample", "--data"])
        .arg(&data)
        .args(["--steps", "2000000", "--thin", "100", "--seed", "5", "--chains", "2", "--arcs-out"])
        .arg(&est)
        .arg("--trace-out")
        .arg(&trace)
        .output()
        .unwrap());
    let s: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(s["samples"], 40_000);
    assert!(s["acceptance_rate"].as_f64().unwrap() <= s["tentative_rate"].as_f64().unwrap());

    let lines: Vec<String> = fs::read_to_string(&trace).unwrap().lines().map(String::from).collect();
    assert_eq!(lines[0], "# format=1");
    assert_eq!(lines.len(), 20_001);
    let rec: serde_json::Value = serde_json::from_str(&lines[1]).unwrap();
    for key in ["step", "log_pi", "b", "move", "accepted"] {
        assert!(rec.get(key).is_some(), "missing {key}");
    }

    let mad: f64 = ok(bin()
        .args(["mad", "--estimate"])
        .arg(&est)
        .arg("--reference")
        .arg(&exact)
        .output()
        .unwrap())
    .trim()
    .parse()
    .unwrap();
    assert!(mad < 0.03, "mad {mad}");
}

#[test]
fn score_file_round_trip_feeds_sample_and_exact() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "100", "2");
    let scores = dir.path().join("scores.txt");
    ok(bin()
        .args(["score", "--data"])
        .arg(&data)
        .args(["--epsilon", "0.01", "--prune", "bottom-up", "--out"])
        .arg(&scores)
        .output()
        .unwrap());
    let from_scores = dir.path().join("a.csv");
    let from_data = dir.path().join("b.csv");
    ok(bin().args(["exact", "--scores"]).arg(&scores).arg("--out").arg(&from_scores).output().unwrap());
    ok(bin()
        .args(["exact", "--data"])
        .arg(&data)
        .args(["--epsilon", "0.01", "--prune", "bottom-up", "--out"])
        .arg(&from_data)
        .output()
        .unwrap());
    assert_eq!(fs::read_to_string(&from_scores).unwrap(), fs::read_to_string(&from_data).unwrap());
    ok(bin()
        .args(["sample", "--scores"])
        .arg(&scores)
        .args(["--steps", "10000", "--thin", "10", "--moves", "basic=100,rev=2,mbr=1", "--engine", "gc"])
        .output()
        .unwrap());
}

#[test]
fn bad_input_fails_with_message() {
    let dir = TempDir::new().unwrap();
    let data = gen(&dir, "20", "3");
    let out = bin()
        .args(["sample", "--data"])
        .arg(&data)
        .args(["--steps", "5", "--thin", "10"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("steps >= thin"));

    let a = dir.path().join("a.csv");
    fs::write(&a, "# format=1\nA,B\n0,1\n1,0\n").unwrap();
    let b = dir.path().join("b.csv");
    fs::write(&b, "# format=1\nA,B,C\n0,1,0\n1,0,0\n0,0,0\n").unwrap();
    let out = bin().args(["mad", "--estimate"]).arg(&a).arg("--reference").arg(&b).output().unwrap();
    assert!(!out.status.success());
}
