//! Runs every example with small arguments. `cargo test` builds the example
//! binaries next to the test executable's `deps` directory.

use std::path::PathBuf;
use std::process::Command;

fn example(name: &str) -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let dir = exe.parent().and_then(|deps| deps.parent()).unwrap().join("examples");
    dir.join(format!("{name}{}", std::env::consts::EXE_SUFFIX))
}

fn run(name: &str, args: &[&str]) -> String {
    let path = example(name);
    assert!(path.exists(), "{} not built", path.display());
    let out = Command::new(&path).args(args).output().unwrap();
    assert!(out.status.success(), "{name} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn scenario_hypergraph() {
    let out = run("scenario_hypergraph", &[]);
    assert!(out.contains("C4 = {A4, A0}"));
    assert!(out.contains("MaximalityViolation"));
    assert!(out.contains("CoverViolation"));
}

#[test]
fn coin_toss_kcbs() {
    let out = run("coin_toss_kcbs", &[]);
    assert!(out.contains("= -5"));
    assert!(out.contains("min -3"));
}

#[test]
fn certify_contextuality() {
    let out = run("certify_contextuality", &[]);
    assert!(out.contains("generalized coin toss: contextual"));
    assert!(out.contains("rearranged device: noncontextual"));
    assert!(!out.contains("violated here: false"));
}

#[test]
fn rearranged_device() {
    let out = run("rearranged_device", &[]);
    assert!(out.contains("KCBS value: -3"));
    assert!(out.contains("global section: true"));
}

#[test]
fn realization_chain() {
    let out = run("realization_chain", &[]);
    assert!(out.contains("classical verification: true"));
    assert!(out.contains("passed true"));
    assert!(out.contains("condition (c)"));
}

#[test]
fn decagon_simulation() {
    let out = run("decagon_simulation", &["2000", "1"]);
    assert!(out.contains("C2 reads (⊤,⊥)"));
    assert!(out.contains("rationalized counts are contextual: true"));
}

#[test]
fn sequential_vs_joint() {
    let out = run("sequential_vs_joint", &["2000", "1"]);
    assert!(out.contains("sequential:"));
}

#[test]
fn overlapped_detectors() {
    let out = run("overlapped_detectors", &["2000", "1"]);
    assert_eq!(out.matches("noncontextual true").count(), 10);
}
