//! Exact arithmetic helpers.
//!
//! Likelihoods of the compiled instances are products of small rationals
//! raised to enormous multiplicities (10^5 and up), so they are kept in
//! factored form: a map from base to integer exponent. Equality of two
//! factored values is then a plain map comparison, and raising to a power
//! multiplies exponents.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Mul;

use num_bigint::{BigInt, BigUint};
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type CRational = Complex<BigRational>;

const TRIAL_LIMIT: u64 = 1 << 20;

fn factor_into(mut n: BigUint, sign: i64, out: &mut BTreeMap<BigUint, BigInt>) {
    let mut p: u64 = 2;
    while p <= TRIAL_LIMIT && !n.is_one() {
        let bp = BigUint::from(p);
        if &bp * &bp > n {
            break;
        }
        let mut e = 0i64;
        loop {
            let (q, r) = n.div_rem(&bp);
            if !r.is_zero() {
                break;
            }
            n = q;
            e += 1;
        }
        if e != 0 {
            *out.entry(bp).or_insert_with(BigInt::zero) += BigInt::from(e * sign);
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if !n.is_one() {
        // Remaining cofactor is prime whenever it is below TRIAL_LIMIT^2.
        *out.entry(n).or_insert_with(BigInt::zero) += BigInt::from(sign);
    }
}

/// A strictly positive rational number stored as `∏ base^exponent`.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Factored {
    powers: BTreeMap<BigUint, BigInt>,
}

impl Factored {
    pub fn one() -> Self {
        Self::default()
    }

    /// Factor a positive rational. Returns `None` for zero or negative input.
    pub fn from_rational(r: &BigRational) -> Option<Self> {
        if !r.is_positive() {
            return None;
        }
        let mut powers = BTreeMap::new();
        factor_into(r.numer().magnitude().clone(), 1, &mut powers);
        factor_into(r.denom().magnitude().clone(), -1, &mut powers);
        let mut f = Self { powers };
        f.normalize();
        Some(f)
    }

    pub fn from_ratio(num: u64, den: u64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        Self::from_rational(&BigRational::new(num.into(), den.into()))
    }

    /// Rebuild from stored `(base, exponent)` pairs. Bases must exceed 1.
    pub fn from_powers(powers: impl IntoIterator<Item = (BigUint, BigInt)>) -> Option<Self> {
        let mut map = BTreeMap::new();
        for (b, e) in powers {
            if b <= BigUint::one() {
                return None;
            }
            *map.entry(b).or_insert_with(BigInt::zero) += e;
        }
        let mut f = Self { powers: map };
        f.normalize();
        Some(f)
    }

    fn normalize(&mut self) {
        self.powers.retain(|_, e| !e.is_zero());
    }

    pub fn pow(&self, e: &BigInt) -> Self {
        let mut out = Self {
            powers: self.powers.iter().map(|(b, x)| (b.clone(), x * e)).collect(),
        };
        out.normalize();
        out
    }

    pub fn powu(&self, e: u64) -> Self {
        self.pow(&BigInt::from(e))
    }

    pub fn recip(&self) -> Self {
        self.pow(&BigInt::from(-1))
    }

    /// Natural logarithm, accumulated in f64.
    pub fn ln(&self) -> f64 {
        self.powers
            .iter()
            .map(|(b, e)| e.to_f64().unwrap_or(f64::NAN) * ln_biguint(b))
            .sum()
    }

    /// Expand back into a rational. Only sensible for modest exponents.
    pub fn to_rational(&self) -> Option<BigRational> {
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for (b, e) in &self.powers {
            let k = e.abs().to_u32()?;
            let f = num_traits::pow(BigInt::from(b.clone()), k as usize);
            if e.is_positive() {
                num *= f;
            } else {
                den *= f;
            }
        }
        Some(BigRational::new(num, den))
    }

    pub fn powers(&self) -> impl Iterator<Item = (&BigUint, &BigInt)> {
        self.powers.iter()
    }
}

fn ln_biguint(b: &BigUint) -> f64 {
    match b.to_f64() {
        Some(x) if x.is_finite() => x.ln(),
        _ => {
            let bits = b.bits();
            let shift = bits.saturating_sub(60);
            let top = (b >> shift).to_f64().unwrap_or(1.0);
            top.ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
}

impl Mul for &Factored {
    type Output = Factored;
    // Multiplying powers adds exponents.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: &Factored) -> Factored {
        let mut powers = self.powers.clone();
        for (b, e) in &rhs.powers {
            *powers.entry(b.clone()).or_insert_with(BigInt::zero) += e;
        }
        let mut f = Factored { powers };
        f.normalize();
        f
    }
}

impl fmt::Debug for Factored {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.powers.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.powers.iter().map(|(b, e)| format!("{b}^{e}")).collect();
        write!(f, "{}", parts.join(" * "))
    }
}

/// An exact nonnegative likelihood: either zero or a factored positive value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExactLikelihood {
    Zero,
    Positive(Factored),
}

impl ExactLikelihood {
    pub fn one() -> Self {
        ExactLikelihood::Positive(Factored::one())
    }

    pub fn from_rational(r: &BigRational) -> Self {
        match Factored::from_rational(r) {
            Some(f) => ExactLikelihood::Positive(f),
            None => ExactLikelihood::Zero,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExactLikelihood::Zero)
    }

    /// Natural log; `-inf` for zero.
    pub fn ln(&self) -> f64 {
        match self {
            ExactLikelihood::Zero => f64::NEG_INFINITY,
            ExactLikelihood::Positive(f) => f.ln(),
        }
    }

    pub fn powu(&self, e: u64) -> Self {
        match self {
            ExactLikelihood::Zero if e == 0 => Self::one(),
            ExactLikelihood::Zero => ExactLikelihood::Zero,
            ExactLikelihood::Positive(f) => ExactLikelihood::Positive(f.powu(e)),
        }
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        match self {
            ExactLikelihood::Zero => Some(BigRational::zero()),
            ExactLikelihood::Positive(f) => f.to_rational(),
        }
    }
}

impl Mul for &ExactLikelihood {
    type Output = ExactLikelihood;
    fn mul(self, rhs: &ExactLikelihood) -> ExactLikelihood {
        match (self, rhs) {
            (ExactLikelihood::Positive(a), ExactLikelihood::Positive(b)) => {
                ExactLikelihood::Positive(a * b)
            }
            _ => ExactLikelihood::Zero,
        }
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Exact (unnormalized) vector with Gaussian-rational entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactVector {
    entries: Vec<CRational>,
}

impl ExactVector {
    pub fn new(entries: Vec<CRational>) -> Self {
        Self { entries }
    }

    pub fn from_ints(re: &[i64], im: &[i64]) -> Self {
        assert_eq!(re.len(), im.len());
        Self {
            entries: re
                .iter()
                .zip(im)
                .map(|(&a, &b)| Complex::new(rat_int(a), rat_int(b)))
                .collect(),
        }
    }

    pub fn from_real_ints(re: &[i64]) -> Self {
        Self::from_ints(re, &vec![0; re.len()])
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[CRational] {
        &self.entries
    }

    pub fn norm_sqr(&self) -> BigRational {
        self.entries
            .iter()
            .fold(BigRational::zero(), |acc, z| acc + z.norm_sqr())
    }

    /// `Σ conj(self_k) other_k`.
    pub fn inner(&self, other: &ExactVector) -> CRational {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(Complex::new(BigRational::zero(), BigRational::zero()), |acc, (a, b)| {
                acc + a.conj() * b.clone()
            })
    }

    /// `|<self|other>|^2 / (|self|^2 |other|^2)`, the squared overlap of the
    /// normalized vectors.
    pub fn overlap_sqr(&self, other: &ExactVector) -> BigRational {
        self.inner(other).norm_sqr() / (self.norm_sqr() * other.norm_sqr())
    }

    pub fn to_f64(&self) -> Vec<Complex<f64>> {
        self.entries
            .iter()
            .map(|z| Complex::new(z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factored_roundtrip_and_powers() {
        let f = Factored::from_ratio(32, 729).unwrap();
        assert_eq!(f.to_rational().unwrap(), rat(32, 729));
        let g = f.powu(3);
        assert_eq!(g.to_rational().unwrap(), rat(32 * 32 * 32, 729 * 729 * 729));
        assert!((g.ln() - 3.0 * (32.0f64 / 729.0).ln()).abs() < 1e-12);
        assert_eq!(&f * &f.recip(), Factored::one());
    }

    #[test]
    fn equal_values_compare_equal_regardless_of_construction() {
        let a = Factored::from_ratio(8, 27).unwrap();
        let b = &Factored::from_ratio(2, 3).unwrap().powu(3) * &Factored::one();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_likelihood_absorbs() {
        let z = ExactLikelihood::from_rational(&rat(0, 1));
        let one = ExactLikelihood::one();
        assert!((&z * &one).is_zero());
        assert_eq!(z.ln(), f64::NEG_INFINITY);
    }

    #[test]
    fn exact_overlap_of_clause_state() {
        let v = ExactVector::from_real_ints(&[1, 1, -2]);
        let psi = ExactVector::from_real_ints(&[1, 1, -1]);
        assert_eq!(v.overlap_sqr(&psi), rat(8, 9));
    }
}
