//! Exact integration of polynomials over real unit spheres.
//!
//! A pure state in `C^d` is a point of `S^(2d-1) ⊂ R^(2d)` with coordinates
//! `(Re x_1..Re x_d, Im x_1..Im x_d)`. Every `⟨x|O|x⟩` is a real quadratic
//! form in those coordinates, so the likelihood of `n` observations is a
//! homogeneous polynomial of degree `2n`, and its sphere integral is a sum of
//! monomial integrals
//!
//! ```text
//! ∫ x^α = 0                                  if some α_i is odd
//!       = 2 ∏ Γ((α_i+1)/2) / Γ(Σ (α_i+1)/2)  otherwise
//! ```
//!
//! Every Gamma value at a half-integer is a rational multiple of a power of
//! `√π`, so each monomial integral is `q · π^k` with `q` rational.

use std::collections::BTreeMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::rat_int;
use crate::hilbert::{ComplexVector, Observation, ObservationSet};

/// Scalar type a polynomial can carry.
pub trait Coefficient:
    Clone
    + Zero
    + One
    + PartialEq
    + Send
    + Sync
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_rational(r: &BigRational) -> Self;
    fn as_f64(&self) -> f64;
}

impl Coefficient for f64 {
    fn from_rational(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
    fn as_f64(&self) -> f64 {
        *self
    }
}

impl Coefficient for BigRational {
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Exponent vector of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zeros(m: usize) -> Self {
        Self(vec![0; m])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn bumped(&self, i: usize, j: usize) -> Self {
        let mut e = self.0.clone();
        e[i] += 1;
        e[j] += 1;
        Self(e)
    }
}

/// Sphere integral in the form `rational · π^pi_power`.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereIntegral {
    pub rational: BigRational,
    pub pi_power: u32,
}

impl SphereIntegral {
    pub fn value(&self) -> f64 {
        self.rational.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI.powi(self.pi_power as i32)
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero()
    }
}

pub(crate) fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `Γ(k + 1/2) / √π = (2k)! / (4^k k!)`.
fn half_gamma_ratio(k: u64) -> BigRational {
    BigRational::new(factorial(2 * k), BigInt::from(4u32).pow(k as u32) * factorial(k))
}

/// Integral of `x^idx` over the unit sphere `S^(m-1) ⊂ R^m`, `m = idx.len()`.
pub fn monomial_sphere_integral(idx: &MultiIndex) -> SphereIntegral {
    let m = idx.len() as u32;
    if idx.0.iter().any(|a| a % 2 == 1) {
        return SphereIntegral { rational: BigRational::zero(), pi_power: m / 2 };
    }
    let mut num = rat_int(2);
    for &a in &idx.0 {
        num *= half_gamma_ratio(a as u64 / 2);
    }
    // Γ(s) with 2s = degree + m.
    let twice_s = idx.degree() as u64 + m as u64;
    let denom = if twice_s.is_multiple_of(2) {
        BigRational::from_integer(factorial(twice_s / 2 - 1))
    } else {
        half_gamma_ratio((twice_s - 1) / 2)
    };
    SphereIntegral { rational: num / denom, pi_power: m / 2 }
}

/// Surface area of `S^(m-1)`: `2 π^(m/2) / Γ(m/2)`.
pub fn sphere_area(m: usize) -> SphereIntegral {
    monomial_sphere_integral(&MultiIndex::zeros(m))
}

/// Sparse real polynomial keyed by exponent vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPolynomial<C> {
    vars: usize,
    terms: BTreeMap<MultiIndex, C>,
}

impl<C: Coefficient> RealPolynomial<C> {
    pub fn one(vars: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(MultiIndex::zeros(vars), C::one());
        Self { vars, terms }
    }

    pub fn zero(vars: usize) -> Self {
        Self { vars, terms: BTreeMap::new() }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, idx: MultiIndex, c: C) {
        debug_assert_eq!(idx.len(), self.vars);
        let v = match self.terms.remove(&idx) {
            Some(old) => old + c,
            None => c,
        };
        if v != C::zero() {
            self.terms.insert(idx, v);
        }
    }

    /// Degree of the highest term.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::degree).max().unwrap_or(0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut acc: BTreeMap<MultiIndex, C> = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let idx = MultiIndex(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect());
                let v = ca.clone() * cb.clone();
                match acc.get_mut(&idx) {
                    Some(slot) => *slot = slot.clone() + v,
                    None => {
                        acc.insert(idx, v);
                    }
                }
            }
        }
        let zero = C::zero();
        acc.retain(|_, v| *v != zero);
        Self { vars: self.vars, terms: acc }
    }

    pub fn scale(&self, s: &C) -> Self {
        Self {
            vars: self.vars,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v.clone() * s.clone())).collect(),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(idx, c)| {
                c.as_f64() * idx.0.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product::<f64>()
            })
            .sum()
    }

    /// `Σ c · ∫ x^idx` with the common `π^(vars/2)` factor split off.
    /// Returns `(rational part, pi power)`.
    pub fn sphere_integral(&self) -> (C, u32) {
        let parts: Vec<C> = self
            .terms
            .par_iter()
            .map(|(idx, c)| {
                let s = monomial_sphere_integral(idx);
                c.clone() * C::from_rational(&s.rational)
            })
            .collect();
        let total = parts.into_iter().fold(C::zero(), |a, b| a + b);
        (total, self.vars as u32 / 2)
    }

    /// Integral of `self · q(x)` where `q` is a quadratic form given as a list
    /// of `(i, j, coefficient)` terms `c · x_i x_j`. The product is never
    /// materialized.
    pub fn sphere_integral_with_quadratic(&self, quad: &[(usize, usize, C)]) -> (C, u32) {
        let parts: Vec<C> = self
            .terms
            .par_iter()
            .map(|(idx, c)| {
                quad.iter().fold(C::zero(), |acc, (i, j, q)| {
                    let s = monomial_sphere_integral(&idx.bumped(*i, *j));
                    acc + c.clone() * q.clone() * C::from_rational(&s.rational)
                })
            })
            .collect();
        let total = parts.into_iter().fold(C::zero(), |a, b| a + b);
        (total, self.vars as u32 / 2)
    }
}

/// Quadratic-form terms `(i, j, c)` of `Re(conj(x_j) M_jk x_k)` given the
/// real and imaginary parts of a Hermitian matrix, in the `(Re, Im)` variable
/// layout.
pub(crate) fn hermitian_quadratic_terms<C: Coefficient>(
    d: usize,
    entry: impl Fn(usize, usize) -> (C, C),
) -> Vec<(usize, usize, C)> {
    let mut out = Vec::new();
    for j in 0..d {
        for k in 0..d {
            let (p, q) = entry(j, k);
            let zero = C::zero();
            if p != zero {
                out.push((j, k, p.clone()));
                out.push((d + j, d + k, p));
            }
            if q != zero {
                // -q (a_j b_k - b_j a_k)
                out.push((j, d + k, -q.clone()));
                out.push((d + j, k, q));
            }
        }
    }
    out
}

fn quadratic_to_polynomial<C: Coefficient>(vars: usize, terms: &[(usize, usize, C)]) -> RealPolynomial<C> {
    let mut p = RealPolynomial::zero(vars);
    for (i, j, c) in terms {
        let mut e = vec![0u32; vars];
        e[*i] += 1;
        e[*j] += 1;
        p.add_term(MultiIndex(e), c.clone());
    }
    p
}

fn observation_quadratic_float(o: &Observation, d: usize) -> Vec<(usize, usize, f64)> {
    let m = o.matrix();
    hermitian_quadratic_terms(d, |j, k| (m[(j, k)].re, m[(j, k)].im))
}

fn observation_quadratic_exact(o: &Observation, d: usize) -> Option<Vec<(usize, usize, BigRational)>> {
    let v = o.exact_vector()?;
    let n = v.norm_sqr();
    let e = v.entries();
    Some(hermitian_quadratic_terms(d, |j, k| {
        let z: Complex<BigRational> = e[j].clone() * e[k].conj();
        (z.re / n.clone(), z.im / n.clone())
    }))
}

/// Limits on monomial expansion.
#[derive(Clone, Copy, Debug)]
pub struct ExpansionConfig {
    /// Largest allowed polynomial degree (twice the expanded observation count).
    pub max_degree: u32,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        Self { max_degree: 24 }
    }
}

/// Expanded likelihood polynomial, exact when every observation has an
/// exact form.
#[derive(Clone, Debug)]
pub enum LikelihoodPolynomial {
    Exact(RealPolynomial<BigRational>),
    Float(RealPolynomial<f64>),
}

impl LikelihoodPolynomial {
    pub fn vars(&self) -> usize {
        match self {
            Self::Exact(p) => p.vars(),
            Self::Float(p) => p.vars(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Exact(p) => p.len(),
            Self::Float(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            Self::Exact(p) => p.evaluate(x),
            Self::Float(p) => p.evaluate(x),
        }
    }
}

/// Expansion result plus the term count after each multiplication.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub polynomial: LikelihoodPolynomial,
    pub term_counts: Vec<usize>,
}

fn guard_degree(obs: &ObservationSet, extra: u32, cfg: &ExpansionConfig) -> Result<()> {
    let deg = 2 * obs.expanded_len() + extra as u64;
    if deg > cfg.max_degree as u64 {
        return Err(Error::limit(format!(
            "expansion degree {deg} exceeds the configured limit {}",
            cfg.max_degree
        )));
    }
    Ok(())
}

fn expand<C: Coefficient>(
    vars: usize,
    quads: impl Iterator<Item = (Vec<(usize, usize, C)>, u64)>,
) -> (RealPolynomial<C>, Vec<usize>) {
    let mut acc = RealPolynomial::one(vars);
    let mut counts = Vec::new();
    for (q, m) in quads {
        let qp = quadratic_to_polynomial(vars, &q);
        for _ in 0..m {
            acc = acc.mul(&qp);
            counts.push(acc.len());
        }
    }
    (acc, counts)
}

/// `∏ ⟨x|O_i|x⟩` as a polynomial in the `2d` real coordinates.
pub fn likelihood_polynomial(obs: &ObservationSet, cfg: &ExpansionConfig) -> Result<Expansion> {
    likelihood_polynomial_with_extra(obs, 0, cfg)
}

pub(crate) fn likelihood_polynomial_with_extra(
    obs: &ObservationSet,
    extra_degree: u32,
    cfg: &ExpansionConfig,
) -> Result<Expansion> {
    guard_degree(obs, extra_degree, cfg)?;
    let d = obs.dim();
    let vars = 2 * d;
    if obs.all_exact() {
        let quads = obs
            .items()
            .iter()
            .map(|(o, m)| (observation_quadratic_exact(o, d).expect("checked exact"), *m));
        let (p, counts) = expand(vars, quads);
        Ok(Expansion { polynomial: LikelihoodPolynomial::Exact(p), term_counts: counts })
    } else {
        let quads = obs.items().iter().map(|(o, m)| (observation_quadratic_float(o, d), *m));
        let (p, counts) = expand(vars, quads);
        Ok(Expansion { polynomial: LikelihoodPolynomial::Float(p), term_counts: counts })
    }
}

/// Which normalization a `p_norm` value uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// Integral against surface measure on `S^(2d-1)`.
    Raw,
    /// Divided by the sphere area: the Haar-probability of the observations.
    Normalized,
}

/// Exact `p_norm` in both conventions.
#[derive(Clone, Debug)]
pub struct PnormExact {
    pub d: usize,
    pub raw: f64,
    pub normalized: f64,
    /// Haar-normalized value as an exact rational, when the instance is exact.
    pub exact_normalized: Option<BigRational>,
    pub term_counts: Vec<usize>,
}

impl PnormExact {
    pub fn value(&self, conv: Convention) -> f64 {
        match conv {
            Convention::Raw => self.raw,
            Convention::Normalized => self.normalized,
        }
    }
}

/// Rational part of `sphere_area(2d) / π^d = 2/(d-1)!`.
pub(crate) fn area_rational(d: usize) -> BigRational {
    BigRational::new(BigInt::from(2), factorial(d as u64 - 1))
}

/// `p_norm` by monomial expansion and term-by-term sphere integration.
pub fn pnorm_exact(obs: &ObservationSet, cfg: &ExpansionConfig) -> Result<PnormExact> {
    let d = obs.dim();
    let exp = likelihood_polynomial(obs, cfg)?;
    let area = area_rational(d);
    let pi_d = std::f64::consts::PI.powi(d as i32);
    let (norm_f, exact) = match &exp.polynomial {
        LikelihoodPolynomial::Exact(p) => {
            let (q, _) = p.sphere_integral();
            let n = q / area.clone();
            (n.to_f64().unwrap_or(f64::NAN), Some(n))
        }
        LikelihoodPolynomial::Float(p) => {
            let (q, _) = p.sphere_integral();
            (q / area.to_f64().unwrap(), None)
        }
    };
    Ok(PnormExact {
        d,
        raw: norm_f * area.to_f64().unwrap() * pi_d,
        normalized: norm_f,
        exact_normalized: exact,
        term_counts: exp.term_counts,
    })
}

/// Mean and standard error of a Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

const MC_CHUNK: u64 = 1 << 14;

/// Average of `f` over uniform points of `S^(m-1)`. Samples are drawn in
/// fixed chunks, each from its own ChaCha stream, and reduced in chunk
/// order, so the result depends only on `seed`.
pub fn sphere_montecarlo<F>(m: usize, samples: u64, seed: u64, f: F) -> McEstimate
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut x = vec![0.0; m];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let mut r2 = 0.0f64;
                for xi in x.iter_mut() {
                    *xi = StandardNormal.sample(&mut rng);
                    r2 += *xi * *xi;
                }
                let inv = 1.0 / r2.sqrt();
                x.iter_mut().for_each(|xi| *xi *= inv);
                let v = f(&x);
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = partial.iter().fold((0.0, 0.0), |(a, b), (c, e)| (a + c, b + e));
    let n = samples as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    McEstimate { mean, stderr: (var / n).sqrt(), samples }
}

/// Haar-normalized `p_norm` by sampling random pure states.
pub fn pnorm_montecarlo(obs: &ObservationSet, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples < 100 {
        return Err(Error::invalid("Monte Carlo needs at least 100 samples"));
    }
    let d = obs.dim();
    Ok(sphere_montecarlo(2 * d, samples, seed, |x| {
        let psi = ComplexVector::from_real_embedding(x).expect("even length");
        crate::hilbert::likelihood(&psi, obs)
    }))
}
