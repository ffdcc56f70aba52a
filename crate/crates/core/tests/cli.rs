use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn champagne(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_champagne"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_build(dir: &Path) -> String {
    let out = dir.join("config.json");
    let out = out.to_str().unwrap().to_string();
    let o = champagne(&[
        "build-unit-ball",
        "-d",
        "2",
        "--gauge",
        "phi-eps:4",
        "--delta",
        "1",
        "--layers",
        "2",
        "--seed",
        "3",
        "--out",
        &out,
    ]);
    assert!(o.status.success(), "build failed: {}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn build_verify_audit_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_build(dir.path());
    let csv = dir.path().join("report.csv");
    let summary = dir.path().join("summary.json");
    let o = champagne(&[
        "verify",
        "--config",
        &cfg,
        "--samples",
        "2000",
        "--epsilon",
        "1e-3",
        "--probes",
        "4",
        "--layer-samples",
        "2000",
        "--out",
        csv.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("layer,R,rho,r,count"));
    assert_eq!(lines.count(), 2);
    let s: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["passed"], Value::Bool(true));

    let o = champagne(&["audit", "--config", &cfg]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn audit_names_planted_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_build(dir.path());
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    let bubbles = v["bubbles"].as_array_mut().unwrap();
    let n = bubbles.len();
    let mut twin = bubbles[5].clone();
    let r = twin["radius"].as_f64().unwrap();
    let x = twin["center"][0].as_f64().unwrap();
    twin["center"][0] = Value::from(x + 0.5 * r);
    bubbles.push(twin);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();

    let o = champagne(&["audit", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let text = stdout(&o);
    assert!(text.contains("FAIL bubbles_disjoint"), "{text}");
    assert!(text.contains(&format!("bubbles 5 and {n} overlap")), "{text}");
}

#[test]
fn builds_are_deterministic_and_render_is_traced() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_build(dir.path());
    let manifest = dir.path().join("m.json");
    let svg = dir.path().join("c.svg");
    let o = champagne(&[
        "render",
        "--config",
        &cfg,
        "--out",
        svg.to_str().unwrap(),
        "--size",
        "200",
        "--manifest",
        manifest.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["inputs"][0]["path"].as_str().unwrap(), cfg);

    // a second build with the same seed writes the same bytes
    let again = dir.path().join("again");
    std::fs::create_dir(&again).unwrap();
    let cfg2 = small_build(&again);
    assert_eq!(std::fs::read(&cfg).unwrap(), std::fs::read(&cfg2).unwrap());
}

#[test]
fn replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_build(dir.path());
    let csv = dir.path().join("report.csv");
    let manifest = dir.path().join("m.json");
    let o = champagne(&[
        "verify",
        "--config",
        &cfg,
        "--samples",
        "1000",
        "--epsilon",
        "1e-3",
        "--probes",
        "2",
        "--layer-samples",
        "1000",
        "--seed",
        "11",
        "--out",
        csv.to_str().unwrap(),
        "--manifest",
        manifest.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let first = std::fs::read(&csv).unwrap();
    std::fs::remove_file(&csv).unwrap();

    let o = champagne(&["replay", manifest.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&csv).unwrap(), first);

    // tampering with the input is refused
    std::fs::write(&cfg, "{}").unwrap();
    let o = champagne(&["replay", manifest.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exact_prints_eta() {
    let o = champagne(&["exact", "-d", "3", "--eta"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let value: f64 = text.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((value - 1.0 / 6.0).abs() < 1e-15, "{text}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(champagne(&["build-unit-ball", "--bogus"]).status.code(), Some(2));
    assert_eq!(champagne(&["exact"]).status.code(), Some(2));
    let o = champagne(&["build-unit-ball", "-d", "1", "--out", "/nonexistent/x.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_config_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("junk.json");
    std::fs::write(&p, "{ not json").unwrap();
    let o = champagne(&["audit", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
