use std::time::Instant;

use qbu_core::verify::{run_suite, RunReport, Status, SuiteConfig};

fn failing(checks: &[qbu_core::Check]) -> Vec<String> {
    checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.name.clone()).collect()
}

#[test]
fn reports_are_deterministic_per_seed() {
    let cfg = SuiteConfig { seed: 3, samples: None, d: None };
    let a = RunReport::new(vec!["graph-chain".into()], b"cfg", run_suite("graph-chain", &cfg).unwrap(), Instant::now());
    let b = RunReport::new(vec!["graph-chain".into()], b"cfg", run_suite("graph-chain", &cfg).unwrap(), Instant::now());
    assert_eq!(serde_json::to_string(&a.deterministic_json()).unwrap(), serde_json::to_string(&b.deterministic_json()).unwrap());
}

#[test]
fn graph_chain_failures_are_the_documented_ones() {
    let checks = run_suite("graph-chain", &SuiteConfig::default()).unwrap();
    assert_eq!(
        failing(&checks),
        ["cycle covers of D(G) = 2^|V| x double covers", "flow pattern bound n=3 is strict"]
    );
}

#[test]
fn lemma_suite_fails_only_on_the_distance_probe() {
    let checks = run_suite("lemmas", &SuiteConfig { seed: 1, samples: Some(2000), d: Some(4) }).unwrap();
    assert_eq!(failing(&checks), ["distance to B0 under amplitude/phase bounds d=4"]);
}

#[test]
fn constants_and_end_to_end_pass() {
    for s in ["constants", "end-to-end"] {
        let checks = run_suite(s, &SuiteConfig::default()).unwrap();
        assert!(failing(&checks).is_empty(), "{s}: {:?}", failing(&checks));
    }
}

#[test]
fn unknown_suite_is_invalid_input() {
    let e = run_suite("nope", &SuiteConfig::default()).unwrap_err();
    assert_eq!(e.exit_code(), 2);
}
