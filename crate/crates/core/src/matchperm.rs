//! Pairing sums, permanents, Gram embeddings and the Wick constant.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::ObservationSet;
use crate::sphere::{factorial, monomial_sphere_integral, Coefficient, MultiIndex};

/// Largest matrix accepted by [`pairing_sum`].
pub const PAIRING_GUARD: usize = 20;
/// Largest matrix accepted by explicit pairing enumeration.
pub const PAIRING_ENUM_GUARD: usize = 16;
/// Largest matrix accepted by [`permanent`].
pub const RYSER_GUARD: usize = 22;
/// Largest matrix accepted by [`permanent_bruteforce`].
pub const BRUTEFORCE_GUARD: usize = 9;

const SYM_TOL: f64 = 1e-12;

/// Dense square matrix over any coefficient type, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareMatrix<C> {
    n: usize,
    data: Vec<C>,
}

impl<C: Coefficient> SquareMatrix<C> {
    pub fn from_rows(rows: Vec<Vec<C>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("matrix rows must all have length equal to the row count"));
        }
        Ok(Self { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![C::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { C::one() } else { C::zero() })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &C {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<C>> {
        self.data.chunks(self.n.max(1)).take(self.n).map(<[C]>::to_vec).collect()
    }

    pub fn map<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> SquareMatrix<D> {
        SquareMatrix { n: self.n, data: self.data.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> SquareMatrix<f64> {
        self.map(Coefficient::as_f64)
    }

    /// `self + s · other`.
    pub fn add_scaled(&self, s: &C, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + s.clone() * b.clone()).collect(),
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.get(i, j).clone() - self.get(j, i).clone()).as_f64().abs() <= tol))
    }
}

impl SquareMatrix<f64> {
    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_eigenvalue(m: &SquareMatrix<f64>) -> f64 {
    if m.size() == 0 {
        return 0.0;
    }
    m.to_dmatrix().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Real symmetric matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix(SquareMatrix<f64>);

impl SymmetricMatrix {
    pub fn new(m: SquareMatrix<f64>) -> Result<Self> {
        if m.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        if !m.is_symmetric(SYM_TOL) {
            return Err(Error::invalid("matrix is not symmetric"));
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(SquareMatrix::from_rows(rows)?)
    }

    pub fn size(&self) -> usize {
        self.0.size()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        *self.0.get(i, j)
    }

    pub fn matrix(&self) -> &SquareMatrix<f64> {
        &self.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.0)
    }
}

/// Symmetric matrix of size `2n` whose rows and columns come in identical
/// adjacent pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubledMatrix {
    matrix: SymmetricMatrix,
    unit_diagonal: bool,
}

impl DoubledMatrix {
    pub fn new(matrix: SymmetricMatrix) -> Result<Self> {
        let m = matrix.size();
        if !m.is_multiple_of(2) {
            return Err(Error::invalid("doubled matrix must have even size"));
        }
        for k in 0..m / 2 {
            for j in 0..m {
                if (matrix.get(2 * k, j) - matrix.get(2 * k + 1, j)).abs() > SYM_TOL {
                    return Err(Error::invalid(format!("rows {} and {} differ", 2 * k, 2 * k + 1)));
                }
            }
        }
        let unit_diagonal = (0..m).all(|i| (matrix.get(i, i) - 1.0).abs() <= SYM_TOL);
        Ok(Self { matrix, unit_diagonal })
    }

    /// Duplicates every row and column of a symmetric `n × n` matrix.
    pub fn from_base(base: &SymmetricMatrix) -> Self {
        let n = base.size();
        let m = SquareMatrix::from_fn(2 * n, |i, j| base.get(i / 2, j / 2));
        Self::new(SymmetricMatrix(m)).expect("doubling preserves the invariants")
    }

    /// Random Gram matrix of `n` unit vectors in `R^n`, doubled.
    pub fn random_psd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let vs: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..n.max(1)).map(|_| rng.sample(StandardNormal)).collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / norm).collect()
            })
            .collect();
        let g = SquareMatrix::from_fn(n, |i, j| {
            if i == j {
                1.0
            } else {
                vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum()
            }
        });
        let g = SquareMatrix::from_fn(n, |i, j| if i <= j { *g.get(i, j) } else { *g.get(j, i) });
        Self::from_base(&SymmetricMatrix(g))
    }

    pub fn size(&self) -> usize {
        self.matrix.size()
    }

    pub fn unit_diagonal(&self) -> bool {
        self.unit_diagonal
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    /// `I[2] = I_n ⊗ J_2`: ones on the 2 × 2 diagonal blocks.
    pub fn i2(size: usize) -> SquareMatrix<f64> {
        SquareMatrix::from_fn(size, |i, j| if i / 2 == j / 2 { 1.0 } else { 0.0 })
    }

    /// `A − I[2]`.
    pub fn minus_i2(&self) -> SquareMatrix<f64> {
        let m = self.matrix.matrix();
        SquareMatrix::from_fn(self.size(), |i, j| m.get(i, j) - if i / 2 == j / 2 { 1.0 } else { 0.0 })
    }
}

fn pairing_dp<C: Coefficient>(m: &SquareMatrix<C>) -> C {
    let n = m.size();
    if n == 0 {
        return C::one();
    }
    let full = (1usize << n) - 1;
    let mut dp: Vec<Option<C>> = vec![None; 1 << n];
    dp[0] = Some(C::one());
    // Always pair the lowest unused index, so each pairing is counted once.
    for mask in 0..full {
        let Some(cur) = dp[mask].take() else { continue };
        let i = (!mask).trailing_zeros() as usize;
        for j in (i + 1)..n {
            if mask & (1 << j) != 0 {
                continue;
            }
            let w = m.get(i, j);
            if *w == C::zero() {
                continue;
            }
            let next = mask | (1 << i) | (1 << j);
            let v = cur.clone() * w.clone();
            dp[next] = Some(match dp[next].take() {
                Some(acc) => acc + v,
                None => v,
            });
        }
    }
    dp[full].take().unwrap_or_else(C::zero)
}

fn check_pairing_size(n: usize, guard: usize) -> Result<()> {
    if !n.is_multiple_of(2) {
        return Err(Error::invalid(format!("pairing sum needs an even size, got {n}")));
    }
    if n > guard {
        return Err(Error::limit(format!("pairing sum of size {n} exceeds the guard {guard}")));
    }
    Ok(())
}

/// `Σ_P ∏_{(i,j) ∈ P} S[i][j]` over perfect pairings `P` of the index set,
/// by dynamic programming over used-index masks.
pub fn pairing_sum<C: Coefficient>(m: &SquareMatrix<C>) -> Result<C> {
    check_pairing_size(m.size(), PAIRING_GUARD)?;
    Ok(pairing_dp(m))
}

/// Same value as [`pairing_sum`] by listing every pairing.
pub fn pairing_sum_enumerate<C: Coefficient>(m: &SquareMatrix<C>) -> Result<C> {
    check_pairing_size(m.size(), PAIRING_ENUM_GUARD)?;
    fn rec<C: Coefficient>(m: &SquareMatrix<C>, left: &mut Vec<usize>, acc: C, out: &mut C) {
        if left.is_empty() {
            *out = out.clone() + acc;
            return;
        }
        let i = left.remove(0);
        for k in 0..left.len() {
            let j = left.remove(k);
            rec(m, left, acc.clone() * m.get(i, j).clone(), out);
            left.insert(k, j);
        }
        left.insert(0, i);
    }
    let mut out = C::zero();
    rec(m, &mut (0..m.size()).collect(), C::one(), &mut out);
    Ok(out)
}

fn ryser_range<C: Coefficient>(m: &SquareMatrix<C>, start: u64, end: u64) -> C {
    let n = m.size();
    let gray = |k: u64| k ^ (k >> 1);
    let mut sums = vec![C::zero(); n];
    let g0 = gray(start - 1);
    for (i, s) in sums.iter_mut().enumerate() {
        for j in 0..n {
            if g0 & (1 << j) != 0 {
                *s = s.clone() + m.get(i, j).clone();
            }
        }
    }
    let mut total = C::zero();
    for k in start..end {
        let j = k.trailing_zeros() as usize;
        let g = gray(k);
        let adding = g & (1 << j) != 0;
        for (i, s) in sums.iter_mut().enumerate() {
            let a = m.get(i, j).clone();
            *s = if adding { s.clone() + a } else { s.clone() - a };
        }
        let prod = sums.iter().fold(C::one(), |p, s| p * s.clone());
        if g.count_ones() % 2 == 0 {
            total = total + prod;
        } else {
            total = total - prod;
        }
    }
    total
}

/// Permanent by Ryser's formula with Gray-code subset order. Large inputs
/// split the subset sequence into fixed chunks summed in order.
pub fn permanent<C: Coefficient>(m: &SquareMatrix<C>) -> Result<C> {
    let n = m.size();
    if n > RYSER_GUARD {
        return Err(Error::limit(format!("permanent of size {n} exceeds the Ryser guard {RYSER_GUARD}")));
    }
    if n == 0 {
        return Ok(C::one());
    }
    let end = 1u64 << n;
    let chunks = if n <= 12 { 1 } else { 64 };
    let step = end.div_ceil(chunks);
    let parts: Vec<C> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = (c * step).max(1);
            let hi = ((c + 1) * step).min(end);
            if lo >= hi {
                C::zero()
            } else {
                ryser_range(m, lo, hi)
            }
        })
        .collect();
    let s = parts.into_iter().fold(C::zero(), |a, b| a + b);
    Ok(if n.is_multiple_of(2) { s } else { -s })
}

/// Permanent as a plain sum over permutations.
pub fn permanent_bruteforce<C: Coefficient>(m: &SquareMatrix<C>) -> Result<C> {
    let n = m.size();
    if n > BRUTEFORCE_GUARD {
        return Err(Error::limit(format!("brute-force permanent of size {n} exceeds {BRUTEFORCE_GUARD}")));
    }
    fn rec<C: Coefficient>(m: &SquareMatrix<C>, row: usize, used: u32, acc: C) -> C {
        if row == m.size() {
            return acc;
        }
        (0..m.size())
            .filter(|j| used & (1 << j) == 0)
            .fold(C::zero(), |s, j| s + rec(m, row + 1, used | (1 << j), acc.clone() * m.get(row, j).clone()))
    }
    Ok(rec(m, 0, 0, C::one()))
}

/// Gram matrix of the real embeddings `r*(v) = (Re v, −Im v)` of the
/// normalized observation vectors, each row doubled.
pub fn gram_from_observations(obs: &ObservationSet) -> Result<DoubledMatrix> {
    if !obs.all_rank_one() {
        return Err(Error::invalid("Gram embedding needs rank-one observations"));
    }
    let vecs: Vec<Vec<f64>> = obs
        .expanded()
        .map(|o| {
            let crate::hilbert::Observation::RankOne { vector, .. } = o else { unreachable!() };
            let v = vector.normalized().expect("observation vectors are nonzero");
            v.entries().iter().map(|z| z.re).chain(v.entries().iter().map(|z| -z.im)).collect()
        })
        .collect();
    let n = vecs.len();
    let base = SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            1.0
        } else {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            vecs[a].iter().zip(&vecs[b]).map(|(x, y)| x * y).sum()
        }
    });
    Ok(DoubledMatrix::from_base(&SymmetricMatrix(base)))
}

/// Normalization `C(d, n)` with `∫_{S^(2d−1)} ∏_{j ≤ 2n} (x·v_j) = C · Σ_P ∏ v·v`,
/// kept as `rational · π^d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WickConstant {
    pub d: usize,
    pub n: usize,
    #[serde(serialize_with = "crate::io::ser_rational")]
    pub rational: BigRational,
    pub pi_power: u32,
    pub value: f64,
}

fn double_factorial_odd(n: usize) -> BigInt {
    // (2n − 1)!!
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(2 * k - 1))
}

/// `C(d, n) = ∫ x_1^(2n) / (2n − 1)!!`: the only pairing-invariant choice,
/// since for `v_j = e_1` every pairing contributes 1.
pub fn wick_constant(d: usize, n: usize) -> Result<WickConstant> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let mut idx = MultiIndex::zeros(2 * d);
    idx.0[0] = 2 * n as u32;
    let s = monomial_sphere_integral(&idx);
    let rational = s.rational / BigRational::from_integer(double_factorial_odd(n));
    let value = rational.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI.powi(s.pi_power as i32);
    Ok(WickConstant { d, n, rational, pi_power: s.pi_power, value })
}

/// The alternative closed form `2 π^d 2^n / (d + n − 1)!`, kept for
/// comparison. It exceeds [`wick_constant`] by `4^n`.
pub fn alt_wick_constant(d: usize, n: usize) -> Result<WickConstant> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    let rational = BigRational::new(BigInt::from(2) * BigInt::from(2).pow(n as u32), factorial((d + n - 1) as u64));
    let value = rational.to_f64().unwrap_or(f64::NAN) * std::f64::consts::PI.powi(d as i32);
    Ok(WickConstant { d, n, rational, pi_power: d as u32, value })
}

/// `C(d, n) · pairing_sum(Gram)`, the pairing-formula value of `p_norm` in
/// the raw convention.
pub fn pnorm_via_pairings(obs: &ObservationSet) -> Result<f64> {
    let g = gram_from_observations(obs)?;
    let n = obs.expanded_len() as usize;
    let c = wick_constant(obs.dim(), n)?;
    Ok(c.value * pairing_sum(g.matrix().matrix())?)
}

/// Which functional of `A − I[2]` to extract.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Functional {
    Pairing,
    Permanent,
}

/// Interpolation node placement on `(0, α_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    /// `α_j = α_max · j/(D+1)`, `j = 1..D+1`.
    Equispaced,
    /// Chebyshev points of `[0, α_max]` (all interior).
    Chebyshev,
}

/// Outcome of a leading-coefficient extraction.
#[derive(Clone, Debug, Serialize)]
pub struct Extraction {
    pub functional: Functional,
    pub value: f64,
    pub degree: usize,
    pub alpha_max: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// `α_max^D Σ |w_j|`: how much the leading-coefficient formula can
    /// amplify errors in the sampled values.
    pub amplification: f64,
}

pub(crate) fn nodes(kind: NodeKind, count: usize, alpha_max: f64) -> Vec<f64> {
    match kind {
        NodeKind::Equispaced => (1..=count).map(|j| alpha_max * j as f64 / count as f64).collect(),
        NodeKind::Chebyshev => (0..count)
            .map(|j| {
                let t = ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * count) as f64).cos();
                alpha_max * (1.0 + t) / 2.0
            })
            .collect(),
    }
}

/// Barycentric weights `1 / ∏_{k≠j} (x_j − x_k)`; the leading coefficient
/// of the interpolant through `(x_j, f_j)` is `Σ w_j f_j`.
pub fn leading_weights<C: Coefficient>(xs: &[C]) -> Result<Vec<C>> {
    xs.iter()
        .enumerate()
        .map(|(j, xj)| {
            let p = xs
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .fold(C::one(), |acc, (_, xk)| acc * (xj.clone() - xk.clone()));
            if p == C::zero() {
                Err(Error::Conditioning(format!("interpolation nodes coincide at index {j}")))
            } else {
                Ok(C::one() / p)
            }
        })
        .collect()
}

/// Leading coefficient of the degree `xs.len() − 1` interpolant.
pub fn interpolate_leading<C: Coefficient>(xs: &[C], fs: &[C]) -> Result<C> {
    if xs.len() != fs.len() || xs.is_empty() {
        return Err(Error::invalid("need matching, nonempty node and value lists"));
    }
    let w = leading_weights(xs)?;
    Ok(w.into_iter().zip(fs).fold(C::zero(), |acc, (w, f)| acc + w * f.clone()))
}

/// Recovers a functional of `A − I[2]` as the top coefficient of the same
/// functional applied to `I[2] + α(A − I[2])`, sampled on PSD-preserving
/// nodes.
pub fn extract_base_permanent(a: &DoubledMatrix, functional: Functional, kind: NodeKind) -> Result<Extraction> {
    if !a.unit_diagonal() {
        return Err(Error::invalid("extraction needs a unit-diagonal doubled matrix"));
    }
    let size = a.size();
    match functional {
        Functional::Pairing => check_pairing_size(size, PAIRING_GUARD)?,
        Functional::Permanent if size > RYSER_GUARD => {
            return Err(Error::limit(format!("permanent of size {size} exceeds the Ryser guard")))
        }
        Functional::Permanent => {}
    }
    let b = a.minus_i2();
    let lam = min_eigenvalue(&b);
    let alpha_max = if lam < 0.0 { 1.0 / lam.abs() } else { 1.0 };
    let degree = match functional {
        Functional::Pairing => size / 2,
        Functional::Permanent => size,
    };
    let xs = nodes(kind, degree + 1, alpha_max);
    // Float entries and nodes are dyadic rationals, so the interpolation runs
    // exactly and the only rounding is the final conversion.
    let bq = to_rational_matrix(&b).ok_or_else(|| Error::invalid("matrix has non-finite entries"))?;
    let xq: Vec<BigRational> = xs
        .iter()
        .map(|x| BigRational::from_float(*x).ok_or_else(|| Error::Conditioning("non-finite node".into())))
        .collect::<Result<_>>()?;
    let i2 = DoubledMatrix::i2(size).map(|x| BigRational::from_float(*x).expect("0 or 1"));
    let fq: Vec<BigRational> = xq
        .iter()
        .map(|x| {
            let ax = i2.add_scaled(x, &bq);
            match functional {
                Functional::Pairing => pairing_sum(&ax),
                Functional::Permanent => permanent(&ax),
            }
        })
        .collect::<Result<_>>()?;
    let value = interpolate_leading(&xq, &fq)?.to_f64().unwrap_or(f64::NAN);
    let fs: Vec<f64> = fq.iter().map(|f| f.to_f64().unwrap_or(f64::NAN)).collect();
    // Sensitivity of the float interpolant, reported for comparison.
    let w = leading_weights(&xs)?;
    let amplification = w.iter().map(|w| w.abs()).sum::<f64>() * alpha_max.powi(degree as i32);
    Ok(Extraction { functional, value, degree, alpha_max, nodes: xs, values: fs, amplification })
}

/// Rounds an `f64` matrix to exact rationals entrywise.
pub fn to_rational_matrix(m: &SquareMatrix<f64>) -> Option<SquareMatrix<BigRational>> {
    let data = m.data.iter().map(|x| BigRational::from_float(*x)).collect::<Option<Vec<_>>>()?;
    Some(SquareMatrix { n: m.n, data })
}

/// `(2n − 1)!!` as a big integer.
pub fn odd_double_factorial(n: usize) -> BigInt {
    double_factorial_odd(n)
}
