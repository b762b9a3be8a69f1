//! Compilation of monotone not-all-equal 3-SAT into observation sets.
//!
//! Variables become basis states of `C^d`, assignments become the binarized
//! states `Σ s_k |k⟩/√d`, and each clause `(a, b, c)` contributes the three
//! projectors onto `|a⟩+|b⟩−2|c⟩` and its cyclic shifts, all orthogonal to
//! `|a⟩+|b⟩+|c⟩`. A clause whose three signs agree therefore zeroes the
//! likelihood of that assignment.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{ExactLikelihood, ExactVector, Factored};
use crate::hilbert::{
    b0_state, basic_observation_set, exact_likelihood, log_likelihood, state_coords, ComplexVector,
    Observation, ObservationSet, PureState, SignVector, C64,
};

/// Monotone NAE-3SAT instance over variables `1..=d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mnae3SatInstance {
    d: usize,
    clauses: Vec<[usize; 3]>,
}

impl Mnae3SatInstance {
    pub fn new(d: usize, clauses: Vec<[usize; 3]>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("instance needs at least one variable"));
        }
        for (i, c) in clauses.iter().enumerate() {
            if c.iter().any(|&v| v == 0 || v > d) {
                return Err(Error::invalid(format!("clause {i} has a variable outside 1..={d}")));
            }
            if c[0] == c[1] || c[1] == c[2] || c[0] == c[2] {
                return Err(Error::invalid(format!("clause {i} repeats a variable")));
            }
        }
        Ok(Self { d, clauses })
    }

    /// The seven lines of the Fano plane: the smallest 3-uniform hypergraph
    /// with no proper 2-coloring.
    pub fn fano() -> Self {
        let lines = [[1, 2, 3], [1, 4, 5], [1, 6, 7], [2, 4, 6], [2, 5, 7], [3, 4, 7], [3, 5, 6]];
        Self::new(7, lines.to_vec()).expect("valid")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn clauses(&self) -> &[[usize; 3]] {
        &self.clauses
    }
}

/// `(satisfied, indices of violated clauses)` for an assignment.
pub fn nae_eval(s: &SignVector, inst: &Mnae3SatInstance) -> Result<(bool, Vec<usize>)> {
    if s.dim() != inst.d {
        return Err(Error::invalid("assignment length does not match the instance"));
    }
    let sg = s.signs();
    let bad: Vec<usize> = inst
        .clauses
        .iter()
        .enumerate()
        .filter(|(_, c)| sg[c[0] - 1] == sg[c[1] - 1] && sg[c[1] - 1] == sg[c[2] - 1])
        .map(|(i, _)| i)
        .collect();
    Ok((bad.is_empty(), bad))
}

/// The three clause projectors for a 1-based clause `(a, b, c)`.
pub fn clause_observations(clause: [usize; 3], d: usize) -> Result<[Observation; 3]> {
    if d < 3 {
        return Err(Error::invalid("clause observations need d >= 3"));
    }
    Mnae3SatInstance::new(d, vec![clause])?;
    let [a, b, c] = clause.map(|v| v - 1);
    let vec_of = |wa: i64, wb: i64, wc: i64| {
        let mut re = vec![0i64; d];
        re[a] = wa;
        re[b] = wb;
        re[c] = wc;
        Observation::rank_one_exact(ExactVector::from_real_ints(&re))
    };
    Ok([vec_of(1, 1, -2)?, vec_of(1, -2, 1)?, vec_of(-2, 1, 1)?])
}

/// Exact clause-triple update `32/(27 d³)` at a good binarized point.
pub fn good_clause_update(d: usize) -> BigRational {
    BigRational::new(BigInt::from(32), BigInt::from(27) * BigInt::from(d).pow(3))
}

/// Data shared by both compilations.
#[derive(Clone, Debug)]
pub struct CompiledCore {
    pub instance: Mnae3SatInstance,
    pub observations: ObservationSet,
    pub k1: u64,
    pub k2: u64,
    pub reps: u64,
    /// The threshold `p`, exactly.
    pub p: ExactLikelihood,
}

impl CompiledCore {
    pub fn log_p(&self) -> f64 {
        self.p.ln()
    }

    pub fn d(&self) -> usize {
        self.instance.d
    }
}

/// Instance compiled under the maximum-likelihood constants.
#[derive(Clone, Debug)]
pub struct CompiledMle {
    pub core: CompiledCore,
    pub c: f64,
    /// `ln` of the promise gap; `reps · ln C` after amplification.
    pub log_gap: f64,
}

/// Instance compiled under the Bayesian-update constants.
#[derive(Clone, Debug)]
pub struct CompiledQbu {
    pub core: CompiledCore,
    pub eps_g: BigRational,
    /// True when `K₁`/`K₂` were supplied rather than derived.
    pub overridden: bool,
}

/// Access to the shared part of a compiled instance.
pub trait Compiled {
    fn core(&self) -> &CompiledCore;
}

impl Compiled for CompiledMle {
    fn core(&self) -> &CompiledCore {
        &self.core
    }
}

impl Compiled for CompiledQbu {
    fn core(&self) -> &CompiledCore {
        &self.core
    }
}

/// Repetition of every observation `reps` times.
pub trait Amplify: Sized {
    fn amplify(&self, reps: u64) -> Result<Self>;
}

fn amplify_core(c: &CompiledCore, reps: u64) -> Result<CompiledCore> {
    if reps == 0 {
        return Err(Error::invalid("reps must be at least 1"));
    }
    Ok(CompiledCore {
        instance: c.instance.clone(),
        observations: c.observations.repeated(reps),
        k1: c.k1,
        k2: c.k2,
        reps: c.reps * reps,
        p: c.p.powu(reps),
    })
}

impl Amplify for CompiledMle {
    fn amplify(&self, reps: u64) -> Result<Self> {
        Ok(Self { core: amplify_core(&self.core, reps)?, c: self.c, log_gap: self.log_gap * reps as f64 })
    }
}

impl Amplify for CompiledQbu {
    fn amplify(&self, reps: u64) -> Result<Self> {
        Ok(Self { core: amplify_core(&self.core, reps)?, eps_g: self.eps_g.clone(), overridden: self.overridden })
    }
}

/// `p = d^(−K₁d²) · (32/(27d³))^(K₂·k)` with one clause factor per clause
/// occurrence, which is the likelihood of a satisfying binarized state.
fn threshold(d: usize, k1: u64, k2: u64, clauses: usize) -> ExactLikelihood {
    let dd = Factored::from_ratio(1, d as u64).expect("d >= 1").powu(k1 * (d * d) as u64);
    let clause = Factored::from_rational(&good_clause_update(d)).expect("positive").powu(k2 * clauses as u64);
    ExactLikelihood::Positive(&dd * &clause)
}

fn assemble(inst: &Mnae3SatInstance, k1: u64, k2: u64) -> Result<ObservationSet> {
    let d = inst.d;
    let mut set = basic_observation_set(d)?.repeated(k1);
    for &c in &inst.clauses {
        for o in clause_observations(c, d)? {
            set.push(o, k2)?;
        }
    }
    Ok(set)
}

fn check_d(d: usize) -> Result<()> {
    if d < 3 {
        return Err(Error::invalid("compilation needs d >= 3"));
    }
    Ok(())
}

/// `K₁ = ⌈1200 d⁵ ln C⌉`.
pub fn mle_k1(d: usize, c: f64) -> u64 {
    (1200.0 * (d as f64).powi(5) * c.ln()).ceil() as u64
}

/// `K₂ = ⌈2 ln C / (3 ln d)⌉`.
pub fn mle_k2(d: usize, c: f64) -> u64 {
    (2.0 * c.ln() / (3.0 * (d as f64).ln())).ceil().max(1.0) as u64
}

/// Compiles with the maximum-likelihood constants for gap `C`.
pub fn compile_mle(inst: &Mnae3SatInstance, c: f64) -> Result<CompiledMle> {
    check_d(inst.d)?;
    if !(c.is_finite() && c > 1.0) {
        return Err(Error::invalid("gap C must be a finite number greater than 1"));
    }
    let (k1, k2) = (mle_k1(inst.d, c), mle_k2(inst.d, c));
    compile_mle_with(inst, c, k1, k2)
}

/// Same construction with explicit multiplicities, for desk-scale runs.
pub fn compile_mle_with(inst: &Mnae3SatInstance, c: f64, k1: u64, k2: u64) -> Result<CompiledMle> {
    check_d(inst.d)?;
    if k1 == 0 || k2 == 0 {
        return Err(Error::invalid("K1 and K2 must be at least 1"));
    }
    let core = CompiledCore {
        instance: inst.clone(),
        observations: assemble(inst, k1, k2)?,
        k1,
        k2,
        reps: 1,
        p: threshold(inst.d, k1, k2, inst.clauses.len()),
    };
    Ok(CompiledMle { core, c, log_gap: c.ln() })
}

/// `K₁ = ⌈1200 d⁷ ln d⌉`.
pub fn qbu_k1(d: usize) -> u64 {
    (1200.0 * (d as f64).powi(7) * (d as f64).ln()).ceil() as u64
}

/// `K₂ = ⌈2d²/3⌉`.
pub fn qbu_k2(d: usize) -> u64 {
    (2 * d * d).div_ceil(3) as u64
}

/// `ε_g = 1/(2400 d⁹ (1+d))`.
pub fn qbu_eps_g(d: usize) -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(2400) * BigInt::from(d).pow(9) * BigInt::from(d + 1))
}

/// Compiles with the Bayesian-update constants, or with explicit `(K₁, K₂)`.
pub fn compile_qbu(inst: &Mnae3SatInstance, overrides: Option<(u64, u64)>) -> Result<CompiledQbu> {
    check_d(inst.d)?;
    let d = inst.d;
    let (k1, k2) = overrides.unwrap_or((qbu_k1(d), qbu_k2(d)));
    if k1 == 0 || k2 == 0 {
        return Err(Error::invalid("K1 and K2 must be at least 1"));
    }
    let core = CompiledCore {
        instance: inst.clone(),
        observations: assemble(inst, k1, k2)?,
        k1,
        k2,
        reps: 1,
        p: threshold(d, k1, k2, inst.clauses.len()),
    };
    Ok(CompiledQbu { core, eps_g: qbu_eps_g(d), overridden: overrides.is_some() })
}

/// One row of a binarized-point table.
#[derive(Clone, Debug)]
pub struct B0Entry {
    pub signs: SignVector,
    pub likelihood: ExactLikelihood,
    pub log_likelihood: f64,
    pub good: bool,
}

/// Largest dimension accepted by [`enumerate_b0`].
pub const B0_GUARD: usize = 20;

/// Exact likelihood at every binarized point, in sign-vector order.
pub fn enumerate_b0<T: Compiled + Sync>(compiled: &T) -> Result<Vec<B0Entry>> {
    let core = compiled.core();
    let d = core.d();
    if d > B0_GUARD {
        return Err(Error::limit(format!("B0 enumeration of d = {d} exceeds the guard {B0_GUARD}")));
    }
    let signs: Vec<SignVector> = SignVector::all(d).collect();
    signs
        .into_par_iter()
        .map(|s| {
            let l = exact_likelihood(&b0_state(&s), &core.observations)?;
            let (good, _) = nae_eval(&s, &core.instance)?;
            Ok(B0Entry { log_likelihood: l.ln(), likelihood: l, good, signs: s })
        })
        .collect()
}

/// A bound that failed at a sampled state.
#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub bound: String,
    pub state: Vec<(f64, f64)>,
    pub measured: f64,
    pub limit: f64,
}

/// Tally for one inequality.
#[derive(Clone, Debug, Serialize)]
pub struct BoundTally {
    pub bound: String,
    pub checked: u64,
    /// Smallest slack seen, in the direction of the inequality.
    pub min_slack: f64,
    pub violations: Vec<Violation>,
}

impl BoundTally {
    fn new(name: &str) -> Self {
        Self { bound: name.to_string(), checked: 0, min_slack: f64::INFINITY, violations: Vec::new() }
    }

    /// Records `measured ≤ limit` (`upper`) or `measured ≥ limit`.
    fn record(&mut self, psi: &ComplexVector, measured: f64, limit: f64, upper: bool) {
        self.checked += 1;
        let slack = if upper { limit - measured } else { measured - limit };
        self.min_slack = self.min_slack.min(slack);
        let tol = BOUND_TOL * limit.abs().max(measured.abs()).max(f64::MIN_POSITIVE);
        if slack < -tol {
            self.violations.push(Violation {
                bound: self.bound.clone(),
                state: psi.entries().iter().map(|z| (z.re, z.im)).collect(),
                measured,
                limit,
            });
        }
    }

    fn merge(&mut self, other: BoundTally) {
        self.checked += other.checked;
        self.min_slack = self.min_slack.min(other.min_slack);
        self.violations.extend(other.violations);
    }
}

/// Relative tolerance for float evaluation at equality cases.
pub const BOUND_TOL: f64 = 1e-9;

/// Outcome of a lemma sweep.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub d: usize,
    pub samples: u64,
    pub seed: u64,
    pub tallies: Vec<BoundTally>,
    /// Samples whose amplitude deviation exceeded 1, where the amplitude
    /// bound is not claimed.
    pub outside_amplitude_hypothesis: u64,
}

impl LemmaReport {
    pub fn violations(&self) -> usize {
        self.tallies.iter().map(|t| t.violations.len()).sum()
    }
}

/// Phase-minimized distance `min_φ |ψ − e^{iφ} b|`.
pub fn phase_distance(psi: &ComplexVector, b: &ComplexVector) -> f64 {
    let ov = b.inner(psi).norm().min(1.0);
    (2.0 - 2.0 * ov).max(0.0).sqrt()
}

/// Point at phase-minimized distance exactly `eps` from `b`, along a random
/// direction orthogonal to `b`.
pub fn perturb_at_distance<R: Rng + ?Sized>(b: &ComplexVector, eps: f64, rng: &mut R) -> ComplexVector {
    let d = b.dim();
    let raw: Vec<C64> = (0..d).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let raw = ComplexVector::new(raw).expect("finite");
    let proj = b.inner(&raw);
    let t: Vec<C64> = raw.entries().iter().zip(b.entries()).map(|(r, bb)| r - bb * proj).collect();
    let t = ComplexVector::new(t).and_then(|t| t.normalized()).expect("nonzero tangent");
    // |cos θ b + sin θ t − b| = 2 sin(θ/2)
    let theta = 2.0 * (eps / 2.0).min(1.0).asin();
    let v: Vec<C64> = b
        .entries()
        .iter()
        .zip(t.entries())
        .map(|(bb, tt)| bb * theta.cos() + tt * theta.sin())
        .collect();
    ComplexVector::new(v).expect("finite")
}

fn clause_update(psi: &ComplexVector, obs: &[Observation; 3]) -> f64 {
    obs.iter().map(|o| o.expectation(psi)).product()
}

fn signs_for(d: usize, clause: [usize; 3], good: bool, rng: &mut impl Rng) -> SignVector {
    let mut s: Vec<i8> = (0..d).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    let [a, b, c] = clause.map(|v| v - 1);
    if good {
        if s[a] == s[b] && s[b] == s[c] {
            s[c] = -s[c];
        }
    } else {
        s[b] = s[a];
        s[c] = s[a];
    }
    if s[0] == -1 {
        s.iter_mut().for_each(|x| *x = -*x);
    }
    SignVector::new(s).expect("normalized signs")
}

/// Adversarial distances used around binarized points.
pub const ADVERSARIAL_EPS: [f64; 5] = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];

const SWEEP_CHUNK: u64 = 256;

/// Checks the basic-round and clause-triple likelihood bounds at sampled
/// states: half Haar-random, half at fixed distances from binarized points
/// that are good or bad for the clause in play.
pub fn verify_lemma_bounds(d: usize, samples: u64, seed: u64) -> Result<LemmaReport> {
    if !(3..=6).contains(&d) {
        return Err(Error::invalid("lemma sweep supports 3 <= d <= 6"));
    }
    if samples < 1000 {
        return Err(Error::invalid("lemma sweep needs at least 1000 samples"));
    }
    let basic = basic_observation_set(d)?;
    let b0: Vec<(SignVector, ComplexVector)> =
        SignVector::all(d).map(|s| (s.clone(), b0_state(&s).vector().clone())).collect();
    let ln_dd = (d * d) as f64 * (d as f64).ln();
    let df = d as f64;
    let good_update = 32.0 / (27.0 * df.powi(3));

    let chunks = samples.div_ceil(SWEEP_CHUNK);
    let parts: Vec<(Vec<BoundTally>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ci);
            let mut t = vec![
                BoundTally::new("amplitude: L·d^(d²) ≤ 1 − ε_α²/(4d), ε_α ≤ 1"),
                BoundTally::new("phase: L·d^(d²) ≤ 1 − 3θ_i², ε_α ≤ 1/2"),
                BoundTally::new("basic lower: L·d^(d²) ≥ 1 − 2ε d^(5/2), ε ≤ 0.1"),
                BoundTally::new("clause max: update ≤ 1"),
                BoundTally::new("clause good: update ≥ 32/(27d³)(1 − 12ε√d)"),
                BoundTally::new("clause bad: update ≤ (64/27)ε³"),
            ];
            let mut outside = 0u64;
            let n = SWEEP_CHUNK.min(samples - ci * SWEEP_CHUNK);
            for k in 0..n {
                let global = ci * SWEEP_CHUNK + k;
                let mut cl = [0usize; 3];
                let mut picked = 0;
                while picked < 3 {
                    let v = rng.random_range(1..=d);
                    if !cl[..picked].contains(&v) {
                        cl[picked] = v;
                        picked += 1;
                    }
                }
                let psi = match global % 4 {
                    0 | 2 => PureState::haar_random(d, &mut rng).vector().clone(),
                    r => {
                        let s = signs_for(d, cl, r == 1, &mut rng);
                        let eps = if global % 97 == 1 { 0.0 } else { ADVERSARIAL_EPS[rng.random_range(0..ADVERSARIAL_EPS.len())] };
                        let b = b0_state(&s).vector().clone();
                        if eps == 0.0 {
                            b
                        } else {
                            perturb_at_distance(&b, eps, &mut rng)
                        }
                    }
                };
                let state = PureState::new(psi.clone()).expect("unit");
                let rel = (log_likelihood(&state, &basic).expect("dims") + ln_dd).exp();
                let coords = state_coords(&state);
                let ea = coords.alpha_deviation();
                if ea <= 1.0 {
                    t[0].record(&psi, rel, 1.0 - ea * ea / (4.0 * df), true);
                } else {
                    outside += 1;
                }
                if ea <= 0.5 {
                    for th in &coords.theta {
                        t[1].record(&psi, rel, 1.0 - 3.0 * th * th, true);
                    }
                }
                let (_, dist) = b0.iter().map(|(s, b)| (s, phase_distance(&psi, b))).fold(
                    (None, f64::INFINITY),
                    |acc, (s, e)| if e < acc.1 { (Some(s), e) } else { acc },
                );
                if dist <= 0.1 {
                    t[2].record(&psi, rel, 1.0 - 2.0 * dist * df.powf(2.5), false);
                }
                let cobs = clause_observations(cl, d).expect("valid clause");
                let u = clause_update(&psi, &cobs);
                t[3].record(&psi, u, 1.0, true);
                for (s, b) in &b0 {
                    let sg = s.signs();
                    let good = !(sg[cl[0] - 1] == sg[cl[1] - 1] && sg[cl[1] - 1] == sg[cl[2] - 1]);
                    let eps = phase_distance(&psi, b);
                    if good {
                        t[4].record(&psi, u, good_update * (1.0 - 12.0 * eps * df.sqrt()), false);
                    } else {
                        t[5].record(&psi, u, 64.0 / 27.0 * eps.powi(3), true);
                    }
                }
            }
            (t, outside)
        })
        .collect();
    let mut iter = parts.into_iter();
    let (mut tallies, mut outside) = iter.next().expect("at least one chunk");
    for (t, o) in iter {
        for (a, b) in tallies.iter_mut().zip(t) {
            a.merge(b);
        }
        outside += o;
    }
    Ok(LemmaReport { d, samples, seed, tallies, outside_amplitude_hypothesis: outside })
}

/// Outcome of the ball-floor check around a good point.
#[derive(Clone, Debug, Serialize)]
pub struct FloorReport {
    pub d: usize,
    pub k1: u64,
    pub k2: u64,
    pub eps_g: f64,
    pub log_p: f64,
    pub floor: f64,
    pub samples: u64,
    pub min_log_likelihood: f64,
    pub violations: u64,
}

/// Samples states at distance `ε_g` from a good point of the single-clause
/// instance compiled with the derived Bayesian-update constants and checks
/// `ln L ≥ ln p + ln(1 − ln d/√d)`.
pub fn likelihood_floor_check(d: usize, samples: u64, seed: u64) -> Result<FloorReport> {
    check_d(d)?;
    let inst = Mnae3SatInstance::new(d, vec![[1, 2, 3]])?;
    let comp = compile_qbu(&inst, None)?;
    let eps = comp.eps_g.to_f64().unwrap_or(0.0);
    let df = d as f64;
    let log_p = comp.core.log_p();
    let floor = log_p + (1.0 - df.ln() / df.sqrt()).ln();
    let good: Vec<SignVector> = SignVector::all(d)
        .filter(|s| nae_eval(s, &inst).map(|r| r.0).unwrap_or(false))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ll = f64::INFINITY;
    let mut violations = 0;
    for k in 0..samples {
        let s = &good[k as usize % good.len()];
        let b = b0_state(s).vector().clone();
        let r = eps * rng.random::<f64>();
        let psi = PureState::new(perturb_at_distance(&b, r, &mut rng))?;
        let ll = log_likelihood(&psi, &comp.core.observations)?;
        min_ll = min_ll.min(ll);
        if ll < floor {
            violations += 1;
        }
    }
    Ok(FloorReport {
        d,
        k1: comp.core.k1,
        k2: comp.core.k2,
        eps_g: eps,
        log_p,
        floor,
        samples,
        min_log_likelihood: min_ll,
        violations,
    })
}

/// Largest observed ratio of the distance to the nearest binarized point over
/// `0.1/d^(3/2)`, at states whose amplitude deviation is below `0.1/d²` and
/// whose gauged phases (in units of π) are below `0.1/d`.
pub fn distance_chain_probe(d: usize, samples: u64, seed: u64) -> Result<f64> {
    check_d(d)?;
    let df = d as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        // Extreme corners on alternate samples, random interior otherwise.
        let corner = k % 2 == 0;
        let mut dev: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mean = dev.iter().sum::<f64>() / df;
        dev.iter_mut().for_each(|x| *x -= mean);
        let norm = dev.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = if corner { 0.1 / (df * df) } else { 0.1 / (df * df) * rng.random::<f64>() };
        let alpha: Vec<f64> = dev.iter().map(|x| 1.0 + x / norm * scale * 0.999_999).collect();
        let theta: Vec<f64> = (0..d)
            .map(|i| {
                if i == 0 {
                    0.0
                } else if corner {
                    0.1 / df * 0.999_999 * if rng.random::<bool>() { 1.0 } else { -1.0 }
                } else {
                    0.1 / df * (2.0 * rng.random::<f64>() - 1.0)
                }
            })
            .collect();
        let v: Vec<C64> = alpha
            .iter()
            .zip(&theta)
            .map(|(a, t)| Complex::from_polar((a / df).sqrt(), std::f64::consts::PI * t))
            .collect();
        let psi = PureState::from_unnormalized(ComplexVector::new(v)?)?;
        let (_, dist) = crate::hilbert::dist_to_b0(&psi);
        worst = worst.max(dist / (0.1 / df.powf(1.5)));
    }
    Ok(worst)
}
