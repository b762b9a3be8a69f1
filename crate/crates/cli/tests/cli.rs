use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qbu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbu")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn json_of(path: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn compile_sat_mle_writes_constants() {
    let dir = tempfile::tempdir().unwrap();
    let sat = write(dir.path(), "sat.json", r#"{"d": 3, "clauses": [[1, 2, 3]]}"#);
    let out = dir.path().join("inst.json").to_str().unwrap().to_string();
    let o = qbu(&["compile", "sat-mle", "--in", &sat, "--C", "2", "--out", &out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_of(&out);
    assert_eq!(v["kind"], "sat-mle");
    assert_eq!(v["K2"], 1);
    assert_eq!(v["K1"], (1200.0 * 243.0 * 2f64.ln()).ceil() as u64);
}

#[test]
fn malformed_clause_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json").to_str().unwrap().to_string();
    let bad = write(dir.path(), "bad.json", r#"{"d": 4, "clauses": [[1, 2]]}"#);
    assert_eq!(qbu(&["compile", "sat-mle", "--in", &bad, "--out", &out]).status.code(), Some(2));
    let small = write(dir.path(), "small.json", r#"{"d": 2, "clauses": [[1, 2, 3]]}"#);
    let o = qbu(&["compile", "sat-qbu", "--in", &small, "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
}

#[test]
fn missing_file_exits_2() {
    let o = qbu(&["eval", "pnorm", "--in", "/nonexistent/obs.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mc_estimate_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let obs = write(dir.path(), "obs.json", r#"{"d": 2, "items": [{"v_re": [1, 0], "v_im": [0, 0], "mult": 2}]}"#);
    let run = || {
        let o = qbu(&["eval", "pnorm", "--in", &obs, "--method", "mc", "--samples", "20000", "--seed", "7"]);
        assert_eq!(o.status.code(), Some(0));
        serde_json::from_slice::<Value>(&o.stdout).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    // E|x_1|^4 over Haar states in C^2 is 1/3.
    let mean = a["value"].as_f64().unwrap();
    let se = a["stderr"].as_f64().unwrap();
    assert!((mean - 1.0 / 3.0).abs() < 4.0 * se, "{mean} ± {se}");
    assert_eq!(a["convention"], "normalized");
}

#[test]
fn exact_pnorm_reports_rational_value() {
    let dir = tempfile::tempdir().unwrap();
    let obs = write(dir.path(), "obs.json", r#"{"d": 2, "items": [{"v_re": ["1", "0"], "v_im": ["0", "0"], "mult": 2}]}"#);
    let o = qbu(&["eval", "pnorm", "--in", &obs, "--method", "exact"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["exact_normalized"], "1/3");
}

#[test]
fn mle_on_compiled_instance_reports_margin() {
    let dir = tempfile::tempdir().unwrap();
    let sat = write(dir.path(), "sat.json", r#"{"d": 3, "clauses": [[1, 2, 3]]}"#);
    let inst = dir.path().join("inst.json").to_str().unwrap().to_string();
    assert_eq!(qbu(&["compile", "sat-mle", "--in", &sat, "--out", &inst]).status.code(), Some(0));
    let o = qbu(&["eval", "mle", "--in", &inst, "--restarts", "8", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["margin"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn graph_instance_recovers_cycle_covers() {
    let dir = tempfile::tempdir().unwrap();
    // Complete digraph on two vertices with loops: two cycle covers.
    let g = write(dir.path(), "g.json", r#"{"n": 2, "edges": [[0, 0, 1], [0, 1, 1], [1, 0, 1], [1, 1, 1]]}"#);
    let inst = dir.path().join("gq.json").to_str().unwrap().to_string();
    assert_eq!(qbu(&["compile", "graph-qbu", "--in", &g, "--out", &inst]).status.code(), Some(0));
    let o = qbu(&["eval", "count", "--in", &inst]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["count"], "2");
}

#[test]
fn verify_constants_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json").to_str().unwrap().to_string();
    let b = dir.path().join("b.json").to_str().unwrap().to_string();
    assert_eq!(qbu(&["verify", "constants", "--out", &a]).status.code(), Some(0));
    assert_eq!(qbu(&["verify", "--suite", "constants", "--out", &b]).status.code(), Some(0));
    let (mut ra, mut rb) = (json_of(&a), json_of(&b));
    for r in [&mut ra, &mut rb] {
        r.as_object_mut().unwrap().remove("wall_time_s");
        r.as_object_mut().unwrap().remove("command");
    }
    assert_eq!(ra, rb);
    for c in ra["checks"].as_array().unwrap() {
        assert_eq!(c["status"], "pass");
        assert!(c.get("tolerance").is_some() && c.get("convention").is_some());
    }
    assert_eq!(ra["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn failing_check_exits_1() {
    // The distance bound probe exceeds its claimed radius, so the lemma
    // suite reports a failure.
    let o = qbu(&["verify", "lemmas", "--d", "3", "--samples", "1000"]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["failed"].as_u64().unwrap() >= 1);
}

#[test]
fn unknown_suite_is_rejected() {
    assert_eq!(qbu(&["verify", "nonsense"]).status.code(), Some(2));
}
