use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use contextuality::behavior::{generalized_coin_toss, rearranged_device_behavior, BehaviorDoc};
use contextuality::cli::RunManifest;
use contextuality::polytope::{decide_noncontextual, DecisionOptions};
use contextuality::realization::{classical_to_quantum, nc_to_classical};
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_contextuality")).args(args).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &Path, name: &str, value: &impl serde::Serialize) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn rearranged_fixtures(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let b = rearranged_device_behavior();
    let witness = decide_noncontextual(&b, DecisionOptions::default()).unwrap().witness().unwrap().clone();
    let classical = nc_to_classical(&witness);
    let quantum = classical_to_quantum(&classical);
    (
        write(dir, "behavior.json", &b.to_doc()),
        write(dir, "classical.json", &classical.to_doc()),
        write(dir, "quantum.json", &quantum.to_doc()),
    )
}

#[test]
fn scenario_cycle_prints_the_five_contexts() {
    let o = run(&["scenario", "--cycle", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let doc = stdout_json(&o);
    let contexts = doc["contexts"].as_array().unwrap();
    assert_eq!(contexts.len(), 5);
    assert_eq!(contexts[4], serde_json::json!(["A4", "A0"]));
}

#[test]
fn scenario_rejects_short_cycles_and_subset_contexts() {
    assert_eq!(run(&["scenario", "--cycle", "2"]).status.code(), Some(2));

    let dir = TempDir::new().unwrap();
    let bad = serde_json::json!({
        "version": 1,
        "measurements": ["A", "B", "C"],
        "outcomes": ["⊥", "⊤"],
        "contexts": [["A", "B"], ["A"], ["B", "C"]]
    });
    let path = write(dir.path(), "bad.json", &bad);
    let o = run(&["scenario", "--file", arg(&path)]);
    assert_eq!(o.status.code(), Some(2));
    let errors: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(errors["errors"].as_array().unwrap().iter().any(|e| e["code"] == "MaximalityViolation"));
}

#[test]
fn usage_and_io_errors() {
    assert_eq!(run(&["scenario"]).status.code(), Some(64));
    assert_eq!(run(&["scenario", "--cycle", "5", "--file", "x.json"]).status.code(), Some(64));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(run(&["simulate", "--trials", "10"]).status.code(), Some(64));
    assert_eq!(run(&["certify", "--behavior", "/nonexistent/behavior.json"]).status.code(), Some(74));
}

#[test]
fn simulate_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["simulate", "--seed", "42", "--trials", "100000", "--output", arg(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["trials.jsonl", "behavior.json", "report.json"] {
        assert!(fs::read(a.join(name)).unwrap() == fs::read(b.join(name)).unwrap(), "{name} differs between reruns");
    }
    let lines = fs::read_to_string(a.join("trials.jsonl")).unwrap().lines().count();
    assert_eq!(lines, 500_000);

    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.command, "simulate");
    assert_eq!(manifest.seed, Some(42));
    assert_eq!(manifest.trials, Some(100_000));
    assert_eq!(manifest.outputs.len(), 3);
}

#[test]
fn simulated_coin_toss_certifies_contextual() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let o = run(&["simulate", "--seed", "5", "--trials", "2000", "--output", arg(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let report = stdout_json(&o);
    assert_eq!(report["correlation"]["exact"], "-5/1");

    let c = run(&["certify", "--behavior", arg(&out.join("behavior.json"))]);
    assert_eq!(c.status.code(), Some(1));
    assert_eq!(stdout_json(&c)["verdict"], "contextual");
}

#[test]
fn simulate_overlapped_matches_the_rearranged_tables() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let o = run(&["simulate", "--mode", "overlapped", "--seed", "9", "--trials", "20000", "--output", arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: BehaviorDoc = serde_json::from_str(&fs::read_to_string(out.join("behavior.json")).unwrap()).unwrap();
    let expected = rearranged_device_behavior().to_doc();
    for (ctx, table) in &expected.tables {
        for (key, p) in table {
            let want = if p == "0/1" || p == "0" { 0.0 } else { 0.5 };
            let got = doc.tables[ctx].get(key).map_or(0.0, |s| {
                let (n, d) = s.split_once('/').unwrap_or((s, "1"));
                n.parse::<f64>().unwrap() / d.parse::<f64>().unwrap()
            });
            assert!((got - want).abs() < 0.02, "{ctx} {key}: {got} vs {want}");
        }
    }
    assert_eq!(stdout_json(&o)["correlation"]["exact"], "-3/1");
}

#[test]
fn simulate_sequential_logs_top_top_pairs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let o = run(&["simulate", "--mode", "sequential", "--trials", "500", "--output", arg(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let log = fs::read_to_string(out.join("trials.jsonl")).unwrap();
    let both_top = log.lines().map(|l| serde_json::from_str::<Value>(l).unwrap()).any(|line| {
        line["mode"] == "sequential" && line["readings"].as_array().unwrap().iter().all(|r| r["outcome"] == "⊤")
    });
    assert!(both_top);
}

#[test]
fn certify_coin_toss_and_rearranged() {
    let dir = TempDir::new().unwrap();
    let coin = write(dir.path(), "coin.json", &generalized_coin_toss().to_doc());
    let o = run(&["certify", "--behavior", arg(&coin)]);
    assert_eq!(o.status.code(), Some(1));
    let doc = stdout_json(&o);
    assert_eq!(doc["verdict"], "contextual");
    assert!(doc["certificate"].is_object());
    assert_eq!(doc["kcbs"]["value"], "-5/1");
    assert_eq!(doc["kcbs"]["violated"], true);

    let (behavior, _, _) = rearranged_fixtures(dir.path());
    let o = run(&["certify", "--behavior", arg(&behavior)]);
    assert_eq!(o.status.code(), Some(0));
    let doc = stdout_json(&o);
    assert_eq!(doc["verdict"], "noncontextual");
    assert!(doc["witness"].is_object());

    let pretty = run(&["--format", "pretty", "certify", "--behavior", arg(&behavior)]);
    assert!(String::from_utf8_lossy(&pretty.stdout).contains("verdict: noncontextual"));
}

#[test]
fn certify_rejects_invalid_documents() {
    let dir = TempDir::new().unwrap();
    let mut doc = generalized_coin_toss().to_doc();
    doc.tables.get_index_mut(0).unwrap().1.insert("⊥,⊤".into(), "1/3".into());
    let unnormalized = write(dir.path(), "unnormalized.json", &doc);
    assert_eq!(run(&["certify", "--behavior", arg(&unnormalized)]).status.code(), Some(2));

    let mut raw = serde_json::to_value(generalized_coin_toss().to_doc()).unwrap();
    raw["surprise"] = Value::Bool(true);
    let unknown = write(dir.path(), "unknown.json", &raw);
    assert_eq!(run(&["certify", "--behavior", arg(&unknown)]).status.code(), Some(2));

    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "{not json").unwrap();
    assert_eq!(run(&["certify", "--behavior", arg(&garbage)]).status.code(), Some(2));
}

#[test]
fn verify_accepts_the_realization_chain() {
    let dir = TempDir::new().unwrap();
    let (behavior, classical, quantum) = rearranged_fixtures(dir.path());
    let o = run(&["verify", "--behavior", arg(&behavior), "--realization", arg(&classical), "--kind", "classical"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(stdout_json(&o)["passed"], true);

    let out = dir.path().join("verify-out");
    let o = run(&[
        "verify",
        "--behavior",
        arg(&behavior),
        "--realization",
        arg(&quantum),
        "--kind",
        "quantum",
        "--output",
        arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("verification.json").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn verify_reports_the_born_rule_for_a_perturbed_projector() {
    let dir = TempDir::new().unwrap();
    let (behavior, _, quantum) = rearranged_fixtures(dir.path());
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&quantum).unwrap()).unwrap();
    // Swap the diagonal entries of A0's projectors at a weighted state (21) and an empty one (0).
    for (_, rows) in doc["projectors"]["A0"].as_object_mut().unwrap() {
        let (a, b) = (rows[21][21].clone(), rows[0][0].clone());
        rows[21][21] = b;
        rows[0][0] = a;
    }
    let perturbed = write(dir.path(), "perturbed.json", &doc);
    let o = run(&["verify", "--behavior", arg(&behavior), "--realization", arg(&perturbed), "--kind", "quantum"]);
    assert_eq!(o.status.code(), Some(1));
    let report = stdout_json(&o);
    assert_eq!(report["passed"], false);
    assert_eq!(report["condition"], "c");
}

#[test]
fn verify_rejects_a_scenario_mismatch() {
    let dir = TempDir::new().unwrap();
    let (_, classical, _) = rearranged_fixtures(dir.path());
    let triangle = write(dir.path(), "triangle.json", &contextuality::behavior::anticorrelated_cycle(3).to_doc());
    let o = run(&["verify", "--behavior", arg(&triangle), "--realization", arg(&classical), "--kind", "classical"]);
    assert_eq!(o.status.code(), Some(2));
}
