//! Acceptance criteria 1-11. Each criterion prints one PASS/FAIL line; the
//! oracles below are written independently of the library code they check.
//!
//! Criteria that cannot pass because the claimed identity is false are listed
//! in `KNOWN_FAILURES`. The test fails if the set of failing criteria differs
//! from that list in either direction.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use qbu_core::estimators::{maximize_likelihood, pnorm_from_rho_avg};
use qbu_core::graphred::{compile_dcc_to_qbu, double_graph, search_gadget, ChainEvaluator, WeightedDigraph};
use qbu_core::hilbert::{b0_state, basic_observation_set, exact_likelihood, log_likelihood, projector_from_vector};
use qbu_core::matchperm::{
    extract_base_permanent, pairing_sum, permanent, permanent_bruteforce, pnorm_via_pairings, alt_wick_constant,
    wick_constant, DoubledMatrix, Functional, NodeKind, SquareMatrix,
};
use qbu_core::satcompile::{clause_observations, compile_mle, enumerate_b0, verify_lemma_bounds, Amplify, Mnae3SatInstance};
use qbu_core::sphere::{pnorm_exact, pnorm_montecarlo, ExpansionConfig};
use qbu_core::{ComplexVector, ExactLikelihood, ObservationSet, SignVector};

/// Criterion 7 includes the claim that the double graph has exactly
/// `2^|V|` times as many cycle covers as the original graph has double
/// covers; a two-vertex counterexample exists.
const KNOWN_FAILURES: &[usize] = &[7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn qi(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

// Independent oracles

fn perm_oracle(m: &[Vec<BigRational>]) -> BigRational {
    fn rec(m: &[Vec<BigRational>], row: usize, used: &mut Vec<bool>, acc: BigRational, out: &mut BigRational) {
        if row == m.len() {
            *out += acc;
            return;
        }
        for c in 0..m.len() {
            if !used[c] && !m[row][c].is_zero() {
                used[c] = true;
                rec(m, row + 1, used, &acc * &m[row][c], out);
                used[c] = false;
            }
        }
    }
    let mut out = BigRational::zero();
    rec(m, 0, &mut vec![false; m.len()], BigRational::one(), &mut out);
    out
}

fn pairing_oracle(m: &[Vec<BigRational>]) -> BigRational {
    fn rec(m: &[Vec<BigRational>], left: Vec<usize>) -> BigRational {
        if left.is_empty() {
            return BigRational::one();
        }
        let (a, rest) = (left[0], &left[1..]);
        let mut s = BigRational::zero();
        for (k, &b) in rest.iter().enumerate() {
            if m[a][b].is_zero() {
                continue;
            }
            let mut r = rest.to_vec();
            r.remove(k);
            s += &m[a][b] * rec(m, r);
        }
        s
    }
    rec(m, (0..m.len()).collect())
}

fn pairing_oracle_f64(m: &[Vec<f64>]) -> f64 {
    fn rec(m: &[Vec<f64>], left: Vec<usize>) -> f64 {
        if left.is_empty() {
            return 1.0;
        }
        let (a, rest) = (left[0], &left[1..]);
        (0..rest.len())
            .map(|k| {
                let mut r = rest.to_vec();
                r.remove(k);
                m[a][rest[k]] * rec(m, r)
            })
            .sum()
    }
    rec(m, (0..m.len()).collect())
}

fn odd_double_factorial(n: u64) -> BigInt {
    (1..=n).map(|k| BigInt::from(2 * k - 1)).product()
}

fn factorial(n: u64) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Surface area of the unit sphere in R^(2d).
fn area(d: usize) -> f64 {
    2.0 * PI.powi(d as i32) / factorial(d as u64 - 1)
}

fn rows_q(m: &SquareMatrix<BigRational>) -> Vec<Vec<BigRational>> {
    m.rows()
}

fn to_q(m: &SquareMatrix<f64>) -> Vec<Vec<BigRational>> {
    m.rows().into_iter().map(|r| r.into_iter().map(|x| BigRational::from_float(x).unwrap()).collect()).collect()
}

/// Double covers by direct enumeration of arc multiplicities 0, 1, 2.
fn double_cover_oracle(n: usize, arcs: &[(usize, usize)], terminals: Option<(usize, usize, u8)>) -> u64 {
    let (mut outd, mut ind) = (vec![2u8; n], vec![2u8; n]);
    if let Some((s, t, f)) = terminals {
        outd[s] = f;
        ind[s] = 0;
        outd[t] = 0;
        ind[t] = f;
    }
    let mut count = 0;
    let total = 3u64.pow(arcs.len() as u32);
    for code in 0..total {
        let (mut o, mut i) = (vec![0u8; n], vec![0u8; n]);
        let mut c = code;
        for &(u, v) in arcs {
            let m = (c % 3) as u8;
            c /= 3;
            o[u] += m;
            i[v] += m;
        }
        if o == outd && i == ind {
            count += 1;
        }
    }
    count
}

fn random_obs(rng: &mut ChaCha8Rng, d: usize, n: usize, real: bool) -> ObservationSet {
    let mut set = ObservationSet::new(d).unwrap();
    for _ in 0..n {
        let re: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let im: Vec<f64> = (0..d).map(|_| if real { 0.0 } else { rng.sample(StandardNormal) }).collect();
        set.push(projector_from_vector(&ComplexVector::from_parts(&re, &im).unwrap()).unwrap(), 1).unwrap();
    }
    set
}

// Criteria

fn c1() -> Outcome {
    let t = Instant::now();
    let mut bad = Vec::new();
    for d in 2..=5usize {
        let psi = b0_state(&SignVector::from_index(d, 0));
        let set = basic_observation_set(d).unwrap();
        let want = BigRational::new(BigInt::one(), BigInt::from(d).pow((d * d) as u32));
        let got = exact_likelihood(&psi, &set).unwrap().to_rational();
        let ll = log_likelihood(&psi, &set).unwrap();
        let ll_want = -((d * d) as f64) * (d as f64).ln();
        if got.as_ref() != Some(&want) || (ll - ll_want).abs() > 1e-12 * ll_want.abs() {
            bad.push(d);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome { pass: bad.is_empty() && secs < 1.0, detail: format!("d=2..5 exact, mismatches {bad:?}, {secs:.3}s") }
}

fn c2() -> Outcome {
    // Squared overlap of (1,1,-1)/sqrt3 with the three clause directions,
    // computed by hand in rationals.
    let s = [1i64, 1, -1];
    let dirs = [[1i64, 1, -2], [1, -2, 1], [-2, 1, 1]];
    let mut want: Vec<BigRational> = dirs
        .iter()
        .map(|v| {
            let dot: i64 = v.iter().zip(&s).map(|(a, b)| a * b).sum();
            q(dot * dot, 6 * 3)
        })
        .collect();
    want.sort();
    let nae = b0_state(&SignVector::new(vec![1, 1, -1]).unwrap());
    let exact = nae.exact().unwrap();
    let mut got: Vec<BigRational> =
        clause_observations([1, 2, 3], 3).unwrap().iter().map(|o| o.exact_expectation(exact).unwrap()).collect();
    got.sort();
    let mut ok = got == want && want == vec![q(2, 9), q(2, 9), q(8, 9)];
    let mut updates = Vec::new();
    for d in 3..=6usize {
        let mut signs = vec![1i8; d];
        signs[1] = -1;
        let psi = b0_state(&SignVector::new(signs.clone()).unwrap());
        let set = ObservationSet::from_items(d, clause_observations([1, 2, 3], d).unwrap().into_iter().map(|o| (o, 1)).collect()).unwrap();
        let got = exact_likelihood(&psi, &set).unwrap().to_rational().unwrap();
        let s3 = [signs[0] as i64, signs[1] as i64, signs[2] as i64];
        let want = dirs.iter().fold(BigRational::one(), |acc, v| {
            let dot: i64 = v.iter().zip(&s3).map(|(a, b)| a * b).sum();
            acc * q(dot * dot, 6 * d as i64)
        });
        ok &= got == want && want == BigRational::new(32.into(), BigInt::from(27) * BigInt::from(d).pow(3));
        updates.push(got.to_string());
    }
    ok &= updates[0] == "32/729";
    Outcome { pass: ok, detail: format!("overlaps {got:?}, updates d=3..6 {updates:?}").replace("Ratio { numer: ", "").replace(", denom: ", "/").replace(" }", "") }
}

fn c3() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_sigma: f64 = 0.0;
    let mut mc_fail = 0;
    for k in 0..50 {
        let d = 1 + k % 3;
        let n = 1 + (k / 3) % 4;
        let obs = random_obs(&mut rng, d, n, k % 2 == 0);
        let ex = pnorm_exact(&obs, &ExpansionConfig::default()).unwrap();
        let mc = pnorm_montecarlo(&obs, 1_000_000, 100 + k as u64).unwrap();
        let z = if mc.stderr > 0.0 { (mc.mean - ex.normalized).abs() / mc.stderr } else { 0.0 };
        if mc.stderr == 0.0 && (mc.mean - ex.normalized).abs() > 1e-12 {
            mc_fail += 1;
        }
        worst_sigma = worst_sigma.max(z);
        if z > 4.0 {
            mc_fail += 1;
        }
    }
    let mut worst_rel: f64 = 0.0;
    for k in 0..30 {
        let d = 1 + k % 3;
        let obs = random_obs(&mut rng, d, 1 + k % 4, k % 2 == 1);
        let ex = pnorm_exact(&obs, &ExpansionConfig::default()).unwrap().normalized;
        let r = pnorm_from_rho_avg(&obs, &ExpansionConfig::default()).unwrap();
        worst_rel = worst_rel.max((r - ex).abs() / ex.abs());
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        pass: mc_fail == 0 && worst_rel <= 1e-9 && secs < 600.0,
        detail: format!("50 MC checks, worst {worst_sigma:.2} sigma; rho route worst rel {worst_rel:.1e}; {secs:.1}s"),
    }
}

fn c4() -> Outcome {
    let mut ok = true;
    for n in 1..=8usize {
        let ones = SquareMatrix::from_fn(2 * n, |_, _| BigRational::one());
        let want = BigRational::from_integer(odd_double_factorial(n as u64));
        ok &= pairing_sum(&ones).unwrap() == want;
        if n <= 5 {
            ok &= pairing_oracle(&ones.rows()) == want;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for k in 0..200 {
        let n = 1 + k % 7;
        let m = SquareMatrix::from_fn(n, |_, _| qi(rng.random_range(-4..=4)));
        let r = permanent(&m).unwrap();
        if r != perm_oracle(&rows_q(&m)) || r != permanent_bruteforce(&m).unwrap() {
            mismatches += 1;
        }
    }
    Outcome { pass: ok && mismatches == 0, detail: format!("(2n-1)!! for n<=8 {}, Ryser vs brute force mismatches {mismatches}/200", if ok { "ok" } else { "wrong" }) }
}

fn c5() -> Outcome {
    // Trapezoid rule is exact for trigonometric polynomials of low degree.
    let nq = 64;
    let quad: f64 = (0..nq).map(|k| (2.0 * PI * k as f64 / nq as f64).cos().powi(2)).sum::<f64>() * 2.0 * PI / nq as f64;
    let c11 = wick_constant(1, 1).unwrap().value;
    let mut ok = (c11 - PI).abs() <= 1e-12 && (c11 - quad).abs() <= 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut parts = vec![format!("C(1,1)={c11:.15} quad={quad:.15}")];
    for (d, n) in [(2usize, 1usize), (2, 2), (3, 1)] {
        let m = 2 * d;
        let vs: Vec<Vec<f64>> = (0..2 * n).map(|_| (0..m).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let gram: Vec<Vec<f64>> = vs.iter().map(|a| vs.iter().map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum()).collect()).collect();
        let predicted = wick_constant(d, n).unwrap().value * pairing_oracle_f64(&gram);
        let samples = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        let mut x = vec![0.0; m];
        for _ in 0..samples {
            let mut r = 0.0f64;
            for xi in x.iter_mut() {
                *xi = rng.sample(StandardNormal);
                r += *xi * *xi;
            }
            let r = r.sqrt();
            let f: f64 = vs.iter().map(|v| v.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / r).product::<f64>() * area(d);
            s += f;
            s2 += f * f;
        }
        let mean = s / samples as f64;
        let se = ((s2 / samples as f64 - mean * mean) / samples as f64).sqrt();
        let z = (mean - predicted).abs() / se;
        ok &= z <= 4.0;
        let ratio = alt_wick_constant(d, n).unwrap().value / wick_constant(d, n).unwrap().value;
        parts.push(format!("(d={d},n={n}) {z:.2} sigma, alternative/derived {ratio}"));
    }
    Outcome { pass: ok, detail: parts.join("; ") }
}

fn pairing_table() -> Vec<(usize, usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut rows = Vec::new();
    for d in 1..=3 {
        for n in 1..=3 {
            let obs = random_obs(&mut rng, d, n, true);
            let ex = pnorm_exact(&obs, &ExpansionConfig::default()).unwrap();
            rows.push((d, n, pnorm_via_pairings(&obs).unwrap() / ex.raw));
        }
    }
    rows
}

fn c6() -> Outcome {
    let (a, b) = (pairing_table(), pairing_table());
    let stable = a.len() == 9 && a.iter().zip(&b).all(|(x, y)| (x.2 - y.2).abs() <= 1e-9 * x.2.abs());
    for (d, n, r) in &a {
        let line = format!("    pairing/exact ratio d={d} n={n}: {r:.9}\n");
        std::io::stderr().write_all(line.as_bytes()).unwrap();
    }
    Outcome { pass: stable, detail: format!("{} rows, reproducible to 1e-9: {stable}", a.len()) }
}

fn all_unit_graphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    let arcs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    (0..1u32 << arcs.len())
        .map(|mask| arcs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, a)| *a).collect())
        .collect()
}

fn c7() -> Outcome {
    let t = Instant::now();
    let gadget = search_gadget(5).unwrap();
    let g_arcs: Vec<(usize, usize)> = gadget.graph.edges().iter().map(|e| (e.from, e.to)).collect();
    let profile: Vec<u64> = (0..3).map(|f| double_cover_oracle(5, &g_arcs, Some((gadget.s, gadget.t, f)))).collect();
    let profile_ok = profile == [3, 4, 3] && gadget.profile.counts == [3, 4, 3];

    let mut graphs = 0;
    let mut count_bad = 0;
    for n in 1..=3 {
        let mut ev: Option<ChainEvaluator> = None;
        for arcs in all_unit_graphs(n) {
            let g = WeightedDigraph::unit(n, &arcs).unwrap();
            let adj: Vec<Vec<BigRational>> =
                (0..n).map(|i| (0..n).map(|j| if arcs.contains(&(i, j)) { qi(1) } else { qi(0) }).collect()).collect();
            let want = perm_oracle(&adj);
            let plan = compile_dcc_to_qbu(&g).unwrap();
            let e = ev.get_or_insert_with(|| ChainEvaluator::new(&plan.gadget, plan.links).unwrap());
            let got = plan.execute_with(e).unwrap().count;
            graphs += 1;
            if got != want {
                count_bad += 1;
            }
        }
    }

    let mut doubling_fail = Vec::new();
    let mut doubling_checked = 0;
    for n in 1..=3 {
        for arcs in all_unit_graphs(n) {
            let g = WeightedDigraph::unit(n, &arcs).unwrap();
            let dg = double_graph(&g);
            let m = 2 * n;
            let adj: Vec<Vec<BigRational>> = (0..m)
                .map(|i| (0..m).map(|j| if dg.edges().iter().any(|e| e.from == i && e.to == j) { qi(1) } else { qi(0) }).collect())
                .collect();
            let covers = perm_oracle(&adj);
            let predicted = qi(1 << n) * qi(double_cover_oracle(n, &arcs, None) as i64);
            doubling_checked += 1;
            if covers != predicted {
                doubling_fail.push((n, arcs.clone(), covers.to_string(), predicted.to_string()));
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let first = doubling_fail.first().map(|(n, a, c, p)| format!("first: |V|={n} arcs {a:?} gives {c} covers vs {p}")).unwrap_or_default();
    Outcome {
        pass: profile_ok && count_bad == 0 && doubling_fail.is_empty() && secs < 300.0,
        detail: format!(
            "counts reproduced on {}/{graphs} graphs; gadget profile {profile:?}; doubling identity fails on {}/{doubling_checked} graphs ({first}); {secs:.1}s",
            graphs - count_bad,
            doubling_fail.len()
        ),
    }
}

fn c8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut zero_targets = 0;
    for k in 0..50 {
        let a = DoubledMatrix::random_psd(1 + k % 4, &mut rng);
        assert!(a.unit_diagonal() && a.size() <= 8);
        let b = to_q(&a.minus_i2());
        for (f, target) in [(Functional::Permanent, perm_oracle(&b)), (Functional::Pairing, pairing_oracle(&b))] {
            let e = extract_base_permanent(&a, f, NodeKind::Equispaced).unwrap();
            let t = target.to_f64().unwrap();
            if target.is_zero() {
                zero_targets += 1;
                worst = worst.max(e.value.abs());
            } else {
                worst = worst.max((e.value - t).abs() / t.abs());
            }
        }
    }
    Outcome { pass: worst <= 1e-6, detail: format!("100 extractions, worst relative error {worst:.2e} ({zero_targets} zero targets checked absolutely)") }
}

fn c9() -> Outcome {
    let t = Instant::now();
    let mut total = 0;
    let mut parts = Vec::new();
    for d in 3..=5 {
        let r = verify_lemma_bounds(d, 10_000, 9).unwrap();
        total += r.violations();
        parts.push(format!("d={d}: {} violations", r.violations()));
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome { pass: total == 0 && secs < 300.0, detail: format!("{}; {secs:.1}s", parts.join(", ")) }
}

fn nae_ok(signs: &[i8], clauses: &[[usize; 3]]) -> bool {
    clauses.iter().all(|c| {
        let s: Vec<i8> = c.iter().map(|&v| signs[v - 1]).collect();
        !(s[0] == s[1] && s[1] == s[2])
    })
}

fn c10() -> Outcome {
    let inst = Mnae3SatInstance::new(3, vec![[1, 2, 3]]).unwrap();
    let comp = compile_mle(&inst, 2.0).unwrap();
    let table = enumerate_b0(&comp).unwrap();
    let good: Vec<_> = table.iter().filter(|e| e.likelihood == comp.core.p).collect();
    let oracle_good = table.iter().filter(|e| nae_ok(e.signs.signs(), inst.clauses())).count();
    let mle = maximize_likelihood(&comp.core.observations, 64, 10).unwrap();
    let single_ok = good.len() == 3 && oracle_good == 3 && mle.log_likelihood >= comp.core.log_p() - 1e-6;

    let fano = Mnae3SatInstance::fano();
    let colourable = (0..128u32).any(|m| nae_ok(&(0..7).map(|i| if m >> i & 1 == 1 { 1 } else { -1 }).collect::<Vec<i8>>(), fano.clauses()));
    let fc = compile_mle(&fano, 2.0).unwrap();
    let ftable = enumerate_b0(&fc).unwrap();
    let all_zero = ftable.len() == 64 && ftable.iter().all(|e| e.likelihood == ExactLikelihood::Zero);
    let fmle = maximize_likelihood(&fc.core.observations, 256, 10).unwrap();
    let margin = fc.core.log_p() - fmle.log_likelihood;
    Outcome {
        pass: single_ok && !colourable && all_zero && margin > 0.0,
        detail: format!(
            "single clause: {} good points, search gap {:.2e}; Fano: {} B0 points all zero = {all_zero}, search margin below log p = {margin:.4}",
            good.len(),
            comp.core.log_p() - mle.log_likelihood,
            ftable.len()
        ),
    }
}

fn c11() -> Outcome {
    let inst = Mnae3SatInstance::new(4, vec![[1, 2, 3], [2, 3, 4]]).unwrap();
    let comp = compile_mle(&inst, 2.0).unwrap();
    let base = enumerate_b0(&comp).unwrap();
    let mut ok = true;
    for reps in [2u64, 3, 5] {
        let amp = comp.amplify(reps).unwrap();
        ok &= amp.core.p == comp.core.p.powu(reps);
        ok &= (amp.core.log_p() - reps as f64 * comp.core.log_p()).abs() <= 1e-12 * comp.core.log_p().abs();
        let t = enumerate_b0(&amp).unwrap();
        for (a, b) in t.iter().zip(&base) {
            ok &= a.likelihood == b.likelihood.powu(reps);
            // Exact check on a rational copy where the numbers are small.
            if let (Some(x), Some(y)) = (a.likelihood.to_rational(), b.likelihood.to_rational()) {
                ok &= x == num_traits::pow(y, reps as usize);
            }
            ok &= a.log_likelihood == b.log_likelihood * reps as f64 || (a.log_likelihood - reps as f64 * b.log_likelihood).abs() <= 1e-12 * a.log_likelihood.abs();
        }
    }
    Outcome { pass: ok, detail: format!("reps 2,3,5 on {} B0 points and log p", base.len()) }
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("basic-round likelihood", c1),
        ("clause constants", c2),
        ("p_norm oracle equivalence", c3),
        ("pairing and permanent kernels", c4),
        ("Wick constant", c5),
        ("pairing-formula table", c6),
        ("graph chain end to end", c7),
        ("permanent extraction", c8),
        ("lemma sweep", c9),
        ("likelihood separation", c10),
        ("amplification", c11),
    ];
    let mut failing = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        let id = i + 1;
        // Written to the stderr handle directly so the lines survive output
        // capture and show up in ordinary `cargo test` logs.
        let line = format!("criterion {id:>2} {} {name}: {}\n", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        std::io::stderr().write_all(line.as_bytes()).unwrap();
        if !o.pass {
            failing.push(id);
        }
    }
    assert_eq!(failing, KNOWN_FAILURES, "failing criteria differ from the documented set");
}
