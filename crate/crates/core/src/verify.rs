//! Verification suites and the JSON run report.
//!
//! Every suite returns a list of [`Check`]s. A check whose identity does not
//! hold fails; nothing is downgraded to a warning.

use std::fmt::Display;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::{maximize_likelihood, pnorm_from_rho_avg};
use crate::exact::{rat, ExactLikelihood, Factored};
use crate::graphred::{
    compile_dcc_to_qbu, compile_dcc_to_qbu_with, count_cycle_covers, double_cover_dp, doubling_identity,
    flow_bound_check, gadget_profile, plain_recovery, search_gadget, square_relation, ChainEvaluator, CompileOptions,
    CoverWeight, Edge, Terminals, WeightedDigraph,
};
use crate::hilbert::{
    b0_state, basic_observation_set, exact_likelihood, log_likelihood, ComplexVector, ObservationSet, SignVector,
};
use crate::matchperm::{
    extract_base_permanent, pairing_sum, permanent, permanent_bruteforce, pairing_sum_enumerate, pnorm_via_pairings, alt_wick_constant, to_rational_matrix,
    wick_constant, DoubledMatrix, Functional, NodeKind, SquareMatrix,
};
use crate::satcompile::{
    clause_observations, compile_mle, compile_mle_with, distance_chain_probe, enumerate_b0, good_clause_update, mle_k1, mle_k2,
    qbu_eps_g, qbu_k1, qbu_k2, likelihood_floor_check, verify_lemma_bounds, Amplify, Mnae3SatInstance,
};
use crate::sphere::{pnorm_exact, pnorm_montecarlo, Convention, ExpansionConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// One named comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub measured: Value,
    pub expected: Value,
    /// `"exact"`, a relative tolerance, or a sigma multiple.
    pub tolerance: Value,
    /// What the numbers mean: exact rational, log-likelihood, ratio, count...
    pub convention: String,
}

impl Check {
    fn status(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn exact(name: impl Into<String>, measured: impl Display, expected: impl Display, convention: &str) -> Self {
        let (m, e) = (measured.to_string(), expected.to_string());
        Self { name: name.into(), status: Self::status(m == e), measured: json!(m), expected: json!(e), tolerance: json!("exact"), convention: convention.into() }
    }

    pub fn rel(name: impl Into<String>, measured: f64, expected: f64, tol: f64, convention: &str) -> Self {
        let ok = (measured - expected).abs() <= tol * expected.abs().max(f64::MIN_POSITIVE) || measured == expected;
        Self { name: name.into(), status: Self::status(ok), measured: json!(measured), expected: json!(expected), tolerance: json!({"relative": tol}), convention: convention.into() }
    }

    pub fn sigma(name: impl Into<String>, measured: f64, stderr: f64, expected: f64, k: f64, convention: &str) -> Self {
        let ok = (measured - expected).abs() <= k * stderr + 1e-12 * expected.abs();
        Self {
            name: name.into(),
            status: Self::status(ok),
            measured: json!({"mean": measured, "stderr": stderr}),
            expected: json!(expected),
            tolerance: json!({"sigmas": k}),
            convention: convention.into(),
        }
    }

    /// Boolean property with free-form evidence.
    pub fn holds(name: impl Into<String>, ok: bool, measured: Value, expected: Value, convention: &str) -> Self {
        Self { name: name.into(), status: Self::status(ok), measured, expected, tolerance: json!("exact"), convention: convention.into() }
    }

    pub fn skipped(name: impl Into<String>, reason: &str) -> Self {
        Self { name: name.into(), status: Status::Skipped, measured: Value::Null, expected: Value::Null, tolerance: Value::Null, convention: reason.into() }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Suite names accepted by [`run_suite`].
pub const SUITES: [&str; 5] = ["constants", "oracles", "lemmas", "graph-chain", "end-to-end"];

/// Knobs shared by the suites.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Sample count for sampling checks; each suite has its own default.
    pub samples: Option<u64>,
    /// Restrict dimension-indexed checks to one `d`.
    pub d: Option<usize>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: 1, samples: None, d: None }
    }
}

pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<Vec<Check>> {
    match name {
        "constants" => constants_suite(cfg),
        "oracles" => oracles_suite(cfg),
        "lemmas" => lemmas_suite(cfg),
        "graph-chain" => graph_chain_suite(cfg),
        "end-to-end" => end_to_end_suite(cfg),
        other => Err(Error::invalid(format!("unknown suite {other:?}; expected one of {SUITES:?}"))),
    }
}

/// Machine-readable result of one CLI invocation.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    /// SHA-256 of the input file, or of the canonical configuration when no
    /// file is involved.
    pub config_hash: String,
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub wall_time_s: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunReport {
    pub fn new(command: Vec<String>, config: &[u8], checks: Vec<Check>, started: Instant) -> Self {
        let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
        Self {
            command,
            config_hash: sha256_hex(config),
            passed: count(Status::Pass),
            failed: count(Status::Fail),
            skipped: count(Status::Skipped),
            checks,
            wall_time_s: started.elapsed().as_secs_f64(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    /// The report without its wall time, which is the only field allowed to
    /// differ between identical runs.
    pub fn deterministic_json(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("serialisable");
        if let Value::Object(m) = &mut v {
            m.remove("wall_time_s");
        }
        v
    }
}

fn dims(cfg: &SuiteConfig, default: &[usize]) -> Vec<usize> {
    cfg.d.map(|d| vec![d]).unwrap_or_else(|| default.to_vec())
}

fn constants_suite(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for d in dims(cfg, &[2, 3, 4, 5]) {
        let psi = b0_state(&SignVector::from_index(d, 0));
        let basic = basic_observation_set(d)?;
        let l = exact_likelihood(&psi, &basic)?;
        let want = ExactLikelihood::Positive(Factored::from_ratio(1, d as u64).expect("d >= 1").powu((d * d) as u64));
        out.push(Check::holds(format!("basic round likelihood d={d} is d^-d^2"), l == want, json!(format!("{l:?}")), json!(format!("{want:?}")), "exact factored"));
        out.push(Check::rel(format!("basic round log-likelihood d={d}"), log_likelihood(&psi, &basic)?, -((d * d) as f64) * (d as f64).ln(), 1e-12, "natural log"));
    }
    let nae = b0_state(&SignVector::new(vec![1, 1, -1])?);
    let nae = nae.exact().expect("binarized states are exact");
    let obs = clause_observations([1, 2, 3], 3)?;
    let mut ov: Vec<BigRational> = obs.iter().filter_map(|o| o.exact_expectation(nae)).collect();
    ov.sort();
    out.push(Check::exact("clause overlaps of a NAE state", format!("{ov:?}"), format!("{:?}", [rat(2, 9), rat(2, 9), rat(8, 9)]), "exact rational"));
    for d in dims(cfg, &[3, 4, 5]).into_iter().filter(|&d| d >= 3) {
        let s = SignVector::new((0..d).map(|i| if i == 2 { -1 } else { 1 }).collect())?;
        let psi = b0_state(&s);
        let set = ObservationSet::from_items(d, clause_observations([1, 2, 3], d)?.into_iter().map(|o| (o, 1)).collect())?;
        let l = exact_likelihood(&psi, &set)?.to_rational().unwrap_or_else(BigRational::zero);
        out.push(Check::exact(format!("clause triple update d={d}"), &l, good_clause_update(d), "exact rational"));
    }
    out.push(Check::exact("clause triple update d=3 is 32/729", good_clause_update(3), rat(32, 729), "exact rational"));
    for n in 1..=8 {
        let ones = SquareMatrix::from_fn(2 * n, |_, _| BigRational::one());
        let want: BigInt = (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(2 * k - 1));
        out.push(Check::exact(format!("pairings of all-ones {}x{}", 2 * n, 2 * n), pairing_sum(&ones)?, want, "exact count"));
    }
    let w = wick_constant(1, 1)?;
    out.push(Check::rel("wick constant d=1 n=1 is pi", w.value, std::f64::consts::PI, 1e-12, "value"));
    for (d, n) in [(1, 1), (2, 1), (2, 2), (3, 1)] {
        let ours = wick_constant(d, n)?;
        let alt = alt_wick_constant(d, n)?;
        let ratio = &alt.rational / &ours.rational;
        out.push(Check::exact(format!("alternative/derived wick constant d={d} n={n}"), ratio, BigInt::from(4).pow(n as u32), "exact ratio, expected 4^n"));
    }
    out.push(Check::exact("K2 for d=3 C=2", mle_k2(3, 2.0), 1, "integer"));
    out.push(Check::exact("K1 for d=3 C=2", mle_k1(3, 2.0), (1200.0 * 243.0 * 2f64.ln()).ceil(), "integer, ceiling"));
    for d in [3usize, 4, 5] {
        out.push(Check::exact(format!("Bayesian K2 d={d}"), qbu_k2(d), (2 * d * d).div_ceil(3), "integer, ceiling"));
        out.push(Check::exact(format!("Bayesian K1 d={d}"), qbu_k1(d), (1200.0 * (d as f64).powi(7) * (d as f64).ln()).ceil(), "integer, ceiling"));
        out.push(Check::exact(format!("eps_g d={d}"), qbu_eps_g(d), BigRational::new(BigInt::one(), BigInt::from(2400) * BigInt::from(d).pow(9) * BigInt::from(d + 1)), "exact rational"));
    }
    Ok(out)
}

fn random_digraph(rng: &mut ChaCha8Rng, n: usize, max_w: i64) -> WeightedDigraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.random::<f64>() < 0.6 {
                edges.push(Edge { from: i, to: j, weight: BigRational::from_integer(rng.random_range(1..=max_w).into()) });
            }
        }
    }
    WeightedDigraph::new(n, edges).expect("valid")
}

/// Random rank-one observations with the given real/complex flavour.
pub fn random_observations(rng: &mut ChaCha8Rng, d: usize, n: usize, real: bool) -> Result<ObservationSet> {
    let mut set = ObservationSet::new(d)?;
    for _ in 0..n {
        let re: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let im: Vec<f64> = (0..d).map(|_| if real { 0.0 } else { rng.sample(StandardNormal) }).collect();
        set.push(crate::hilbert::projector_from_vector(&ComplexVector::from_parts(&re, &im)?)?, 1)?;
    }
    Ok(set)
}

/// Ratios `pnorm_via_pairings / pnorm_exact(raw)` on real-vector instances.
pub fn pairing_ratio_table(seed: u64) -> Result<Vec<(usize, usize, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for d in 1..=3 {
        for n in 1..=3 {
            let obs = random_observations(&mut rng, d, n, true)?;
            let ex = pnorm_exact(&obs, &ExpansionConfig::default())?;
            rows.push((d, n, pnorm_via_pairings(&obs)? / ex.raw));
        }
    }
    Ok(rows)
}

fn oracles_suite(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut bad = 0;
    for k in 0..100 {
        let g = random_digraph(&mut rng, 1 + k % 6, 5);
        if count_cycle_covers(&g)? != permanent(&g.adjacency())? {
            bad += 1;
        }
    }
    out.push(Check::exact("cycle covers equal the adjacency permanent (100 graphs)", bad, 0, "mismatch count"));
    let mut bad = 0;
    for k in 0..200 {
        let n = 1 + k % 7;
        let m = SquareMatrix::from_fn(n, |_, _| BigRational::from_integer(rng.random_range(-3..=3).into()));
        if permanent(&m)? != permanent_bruteforce(&m)? {
            bad += 1;
        }
    }
    out.push(Check::exact("Ryser equals brute force (200 matrices)", bad, 0, "mismatch count"));
    let samples = cfg.samples.unwrap_or(200_000);
    for k in 0..6 {
        let d = 1 + k % 3;
        let obs = random_observations(&mut rng, d, 1 + k % 4, k % 2 == 0)?;
        let ex = pnorm_exact(&obs, &ExpansionConfig::default())?;
        let mc = pnorm_montecarlo(&obs, samples, cfg.seed.wrapping_add(k as u64))?;
        out.push(Check::sigma(format!("pnorm exact vs Monte Carlo #{k} (d={d})"), mc.mean, mc.stderr, ex.normalized, 4.0, "normalized"));
        let via_rho = pnorm_from_rho_avg(&obs, &ExpansionConfig::default())?;
        out.push(Check::rel(format!("pnorm exact vs rho_avg route #{k}"), via_rho, ex.normalized, 1e-9, "normalized"));
    }
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let a = DoubledMatrix::random_psd(1 + k % 4, &mut rng);
        for f in [Functional::Pairing, Functional::Permanent] {
            let e = extract_base_permanent(&a, f, NodeKind::Equispaced)?;
            let bq = to_rational_matrix(&a.minus_i2()).expect("finite");
            let target = match f {
                Functional::Pairing => pairing_sum_enumerate(&bq)?,
                Functional::Permanent => permanent_bruteforce(&bq)?,
            }
            .to_f64()
            .unwrap_or(f64::NAN);
            let err = (e.value - target).abs() / target.abs().max(1e-300);
            if target.abs() > 1e-12 {
                worst = worst.max(err);
            }
        }
    }
    out.push(Check::holds("extraction matches direct functional (50 matrices)", worst <= 1e-6, json!(worst), json!(0.0), "max relative error, tolerance 1e-6"));
    let t1 = pairing_ratio_table(cfg.seed)?;
    let t2 = pairing_ratio_table(cfg.seed)?;
    let stable = t1.iter().zip(&t2).all(|(a, b)| (a.2 - b.2).abs() <= 1e-9 * a.2.abs());
    let table: Vec<Value> = t1.iter().map(|(d, n, r)| json!({"d": d, "n": n, "ratio": r})).collect();
    out.push(Check::holds("pairing-formula ratio table reproducible", stable, json!(table), json!("identical across runs"), "pairing formula over raw pnorm"));
    Ok(out)
}

fn lemmas_suite(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let samples = cfg.samples.unwrap_or(10_000);
    for d in dims(cfg, &[3, 4, 5]) {
        let r = verify_lemma_bounds(d, samples, cfg.seed)?;
        for t in &r.tallies {
            out.push(Check::holds(
                format!("{} d={d}", t.bound),
                t.violations.is_empty(),
                json!({"checked": t.checked, "violations": t.violations.len(), "min_slack": t.min_slack}),
                json!({"violations": 0}),
                "relative tolerance 1e-9",
            ));
        }
        let f = likelihood_floor_check(d, 200, cfg.seed)?;
        out.push(Check::holds(
            format!("likelihood floor within eps_g d={d}"),
            f.violations == 0,
            json!({"min_log_likelihood": f.min_log_likelihood, "violations": f.violations}),
            json!({"floor": f.floor}),
            "natural log",
        ));
        let ratio = distance_chain_probe(d, 2000, cfg.seed)?;
        out.push(Check::holds(
            format!("distance to B0 under amplitude/phase bounds d={d}"),
            ratio <= 1.0,
            json!(ratio),
            json!("<= 1"),
            "distance over 0.1/d^1.5",
        ));
    }
    Ok(out)
}

fn all_unit_graphs(n: usize) -> Vec<WeightedDigraph> {
    let arcs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    (0..(1u32 << arcs.len()))
        .map(|mask| {
            let chosen: Vec<_> = arcs.iter().enumerate().filter(|(b, _)| mask & (1 << b) != 0).map(|(_, a)| *a).collect();
            WeightedDigraph::unit(n, &chosen).expect("valid")
        })
        .collect()
}

/// Two copies of the gadget in series from vertex 0 to vertex 1 through a
/// looped join vertex 2.
fn two_link_series(gadget: &crate::graphred::Gadget) -> WeightedDigraph {
    let interior = gadget.interior_size();
    let mut edges = vec![Edge { from: 2, to: 2, weight: BigRational::one() }];
    for (k, (entry, exit)) in [(0, 2), (2, 1)].into_iter().enumerate() {
        let base = 3 + k * interior;
        let map = |x: usize| match x {
            x if x == gadget.s => entry,
            x if x == gadget.t => exit,
            i => base + i - 2,
        };
        edges.extend(gadget.graph.edges().iter().map(|e| Edge { from: map(e.from), to: map(e.to), weight: e.weight.clone() }));
    }
    WeightedDigraph::new(3 + 2 * interior, edges).expect("valid series graph")
}

fn graph_chain_suite(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let gadget = search_gadget(5)?;
    out.push(Check::exact("gadget flow profile", format!("{:?}", gadget.profile.counts), "[3, 4, 3]", "double-cover counts"));
    out.push(Check::exact("gadget profile recount", format!("{:?}", gadget_profile(&gadget)?.counts), "[3, 4, 3]", "double-cover counts"));
    out.push(Check::holds("gadget amplifies twin-weighted flow", gadget.amplifies_twin(), json!(gadget.twin_profile.counts), json!("W1 > max(W0, W2)"), "twin-weighted counts"));
    let series: Vec<String> = (0..3u8)
        .map(|f| double_cover_dp(&two_link_series(&gadget), Some(Terminals { s: 0, t: 1, flow: f }), CoverWeight::Plain).map(|c| c.to_string()))
        .collect::<Result<_>>()?;
    out.push(Check::exact("two links in series", format!("{series:?}"), "[\"9\", \"16\", \"9\"]", "double-cover counts per net flow"));
    let mut plain_fail = 0;
    let mut twin_fail = 0;
    let mut total = 0;
    let mut example = Value::Null;
    for n in 1..=3 {
        let graphs = all_unit_graphs(n);
        let step = if n == 3 { 16 } else { 1 };
        for g in graphs.iter().step_by(step) {
            let c = doubling_identity(g)?;
            total += 1;
            if !c.plain_holds {
                plain_fail += 1;
                if example.is_null() {
                    example = serde_json::to_value(&c)?;
                }
            }
            if !c.twin_holds {
                twin_fail += 1;
            }
        }
    }
    out.push(Check::holds(
        "cycle covers of D(G) = 2^|V| x double covers",
        plain_fail == 0,
        json!({"graphs": total, "failures": plain_fail, "first_failure": example}),
        json!({"failures": 0}),
        "exact counts",
    ));
    out.push(Check::exact("cycle covers of D(G) = 2^|V| x twin-weighted double covers", twin_fail, 0, "failure count"));
    for n in 1..=8 {
        let b = flow_bound_check(n);
        out.push(Check::holds(format!("flow pattern bound n={n} is strict"), b.strict, json!(b.patterns), json!(format!("< {}", b.claimed_bound)), "exact integers"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut evals: Vec<Option<ChainEvaluator>> = (0..=3).map(|_| None).collect();
    for k in 0..6 {
        let n = 1 + k % 3;
        let g = random_digraph(&mut rng, n, 1);
        let plan = compile_dcc_to_qbu(&g)?;
        let ev = match &mut evals[n] {
            Some(e) => e,
            slot => slot.insert(ChainEvaluator::new(&plan.gadget, plan.links)?),
        };
        let o = plan.execute_with(ev)?;
        out.push(Check::exact(format!("plan reproduces cycle covers, random graph #{k} (n={n}, links={})", plan.links), &o.count, count_cycle_covers(&g)?, "exact count"));
    }
    let tiny = WeightedDigraph::unit(1, &[(0, 0)])?;
    let plan = compile_dcc_to_qbu_with(&tiny, &CompileOptions { links: Some(1), gadget: None })?;
    let dense = plan.execute(crate::graphred::Evaluator::Dense)?;
    let structured = plan.execute(crate::graphred::Evaluator::Structured)?;
    out.push(Check::exact("dense and structured evaluators agree", &dense.leading, &structured.leading, "exact leading coefficient"));
    let sq = square_relation(&plan)?;
    out.push(Check::holds("lifted permanent is the square of the base permanent", sq.square_holds, json!(sq.square_ratio), json!(1.0), "perm(A_bip)/perm(M)^2"));
    out.push(Check::holds("lifted pairing sum equals the base permanent", sq.pairing_holds, json!(sq.lifted_pairing.to_string()), json!(sq.base_permanent.to_string()), "exact"));
    for g in [WeightedDigraph::unit(2, &[(0, 1), (1, 0)])?, WeightedDigraph::unit(2, &[(0, 0), (0, 1), (1, 0), (1, 1)])?] {
        let plan = compile_dcc_to_qbu(&g)?;
        let p = plain_recovery(&plan)?;
        out.push(Check::holds(
            format!("plain double-cover recovery residual < 1 ({} arcs)", g.edges().len()),
            p.residual.abs() < 1.0 && p.count == count_cycle_covers(&g)?,
            json!({"residual": p.residual, "count": p.count.to_string()}),
            json!({"residual": "< 1"}),
            "N'/4^(links) - N",
        ));
    }
    Ok(out)
}

fn end_to_end_suite(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let inst = Mnae3SatInstance::new(3, vec![[1, 2, 3]])?;
    let comp = compile_mle(&inst, 2.0)?;
    let table = enumerate_b0(&comp)?;
    let good: Vec<_> = table.iter().filter(|e| e.good).collect();
    out.push(Check::exact("single clause d=3: good B0 points", good.len(), 3, "count"));
    out.push(Check::holds(
        "single clause d=3: good points sit at p exactly",
        good.iter().all(|e| e.likelihood == comp.core.p),
        json!(good.iter().map(|e| e.log_likelihood).collect::<Vec<_>>()),
        json!(comp.core.log_p()),
        "exact factored",
    ));
    let mle = maximize_likelihood(&comp.core.observations, 16, cfg.seed)?;
    out.push(Check::holds(
        "single clause d=3: search reaches log p",
        mle.log_likelihood >= comp.core.log_p() - 1e-6,
        json!(mle.log_likelihood),
        json!(comp.core.log_p()),
        "natural log, tolerance 1e-6",
    ));
    for reps in [2u64, 3, 5] {
        let amp = comp.amplify(reps)?;
        let scaled = comp.core.p.powu(reps);
        out.push(Check::holds(format!("amplify x{reps} raises p to the power reps"), amp.core.p == scaled, json!(amp.core.log_p()), json!(comp.core.log_p() * reps as f64), "exact factored"));
        let e0 = &table[0];
        let ea = &enumerate_b0(&amp)?[0];
        out.push(Check::holds(format!("amplify x{reps} raises B0 likelihoods to the power reps"), ea.likelihood == e0.likelihood.powu(reps), json!(ea.log_likelihood), json!(e0.log_likelihood * reps as f64), "exact factored"));
    }
    let small = compile_mle_with(&inst, 2.0, 1, 1)?;
    let obs = &small.core.observations;
    let ex = pnorm_exact(obs, &ExpansionConfig::default())?;
    let mc = pnorm_montecarlo(obs, cfg.samples.unwrap_or(200_000), cfg.seed)?;
    out.push(Check::sigma("compiled K1=K2=1 instance: exact vs Monte Carlo pnorm", mc.mean, mc.stderr, ex.value(Convention::Normalized), 4.0, "normalized"));
    Ok(out)
}
