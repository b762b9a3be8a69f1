//! Pure states, observations and likelihoods on `C^d`.
//!
//! A likelihood is `∏ ⟨ψ|O|ψ⟩^m` over the items of an [`ObservationSet`].
//! It is reported in natural-log space because realistic multiplicities
//! underflow any float. Observations and states built from small integer
//! vectors (the basic, clause and binarized families) also carry an exact
//! Gaussian-rational form, which lets likelihoods at those points be
//! evaluated with no rounding at all.

use nalgebra::DMatrix;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exact::{ExactLikelihood, ExactVector};

pub type C64 = Complex<f64>;

const UNIT_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;

/// A finite, nonempty vector in `C^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector(Vec<C64>);

impl ComplexVector {
    pub fn new(entries: Vec<C64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("vector must have dimension >= 1"));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("vector entries must be finite"));
        }
        Ok(Self(entries))
    }

    pub fn from_real(re: &[f64]) -> Result<Self> {
        Self::new(re.iter().map(|&x| Complex::new(x, 0.0)).collect())
    }

    pub fn from_parts(re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::invalid("real and imaginary parts differ in length"));
        }
        Self::new(re.iter().zip(im).map(|(&a, &b)| Complex::new(a, b)).collect())
    }

    pub fn basis(d: usize, k: usize) -> Self {
        let mut v = vec![Complex::zero(); d];
        v[k] = Complex::new(1.0, 0.0);
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[C64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩ = Σ conj(self_k) other_k`.
    pub fn inner(&self, other: &ComplexVector) -> C64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self(self.0.iter().map(|z| z * s).collect())
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::invalid("zero vector cannot be normalized"));
        }
        Ok(self.scaled(Complex::new(1.0 / n, 0.0)))
    }

    /// Real embedding `(Re x_1..Re x_d, Im x_1..Im x_d)`.
    pub fn to_real(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.re).chain(self.0.iter().map(|z| z.im)).collect()
    }

    pub fn from_real_embedding(x: &[f64]) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(Error::invalid("real embedding must have even length"));
        }
        let d = x.len() / 2;
        Self::from_parts(&x[..d], &x[d..])
    }

    pub fn distance(&self, other: &ComplexVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// A unit vector, optionally with an exact unnormalized representative.
#[derive(Clone, Debug)]
pub struct PureState {
    vector: ComplexVector,
    exact: Option<ExactVector>,
}

impl PureState {
    /// Wrap a vector that must already have unit norm.
    pub fn new(vector: ComplexVector) -> Result<Self> {
        let n = vector.norm();
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::invalid(format!("state norm {n} is not 1")));
        }
        Ok(Self { vector, exact: None })
    }

    pub fn from_unnormalized(vector: ComplexVector) -> Result<Self> {
        Ok(Self { vector: vector.normalized()?, exact: None })
    }

    pub fn from_exact(exact: ExactVector) -> Result<Self> {
        let v = ComplexVector::new(exact.to_f64())?.normalized()?;
        Ok(Self { vector: v, exact: Some(exact) })
    }

    /// Haar-random pure state: a normalized standard complex Gaussian vector.
    pub fn haar_random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        loop {
            let v: Vec<C64> = (0..d)
                .map(|_| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let v = ComplexVector(v);
            if let Ok(u) = v.normalized() {
                return Self { vector: u, exact: None };
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.vector.dim()
    }

    pub fn vector(&self) -> &ComplexVector {
        &self.vector
    }

    pub fn exact(&self) -> Option<&ExactVector> {
        self.exact.as_ref()
    }

    pub fn with_phase(&self, phi: f64) -> Self {
        Self { vector: self.vector.scaled(Complex::from_polar(1.0, phi)), exact: None }
    }

    /// Distance to `other` minimized over a global phase:
    /// `sqrt(2 - 2 |⟨other|self⟩|)`.
    pub fn phase_distance(&self, other: &PureState) -> f64 {
        let ov = other.vector.inner(&self.vector).norm().min(1.0);
        (2.0 - 2.0 * ov).max(0.0).sqrt()
    }
}

/// A measurement outcome operator.
#[derive(Clone, Debug)]
pub enum Observation {
    /// Projector `|v⟩⟨v|` onto a unit vector.
    RankOne { vector: ComplexVector, exact: Option<ExactVector> },
    /// Hermitian positive semidefinite matrix.
    General { matrix: DMatrix<C64> },
}

impl Observation {
    pub fn dim(&self) -> usize {
        match self {
            Observation::RankOne { vector, .. } => vector.dim(),
            Observation::General { matrix } => matrix.nrows(),
        }
    }

    pub fn general(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::invalid("observation matrix must be square and nonempty"));
        }
        let d = matrix.nrows();
        for i in 0..d {
            for j in 0..d {
                if (matrix[(i, j)] - matrix[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return Err(Error::invalid("observation matrix is not Hermitian"));
                }
            }
        }
        let eig = matrix.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l < -HERMITIAN_TOL) {
            return Err(Error::invalid("observation matrix is not positive semidefinite"));
        }
        Ok(Observation::General { matrix })
    }

    pub fn rank_one_exact(v: ExactVector) -> Result<Self> {
        let vector = ComplexVector::new(v.to_f64())?.normalized()?;
        Ok(Observation::RankOne { vector, exact: Some(v) })
    }

    pub fn trace(&self) -> f64 {
        match self {
            Observation::RankOne { .. } => 1.0,
            Observation::General { matrix } => matrix.trace().re,
        }
    }

    /// Dense matrix form.
    pub fn matrix(&self) -> DMatrix<C64> {
        match self {
            Observation::RankOne { vector, .. } => {
                let v = vector.entries();
                DMatrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
            }
            Observation::General { matrix } => matrix.clone(),
        }
    }

    /// `⟨ψ|O|ψ⟩` for a (not necessarily normalized) vector.
    pub fn expectation(&self, psi: &ComplexVector) -> f64 {
        match self {
            Observation::RankOne { vector, .. } => vector.inner(psi).norm_sqr(),
            Observation::General { matrix } => {
                let x = psi.entries();
                let mut acc = Complex::zero();
                for i in 0..x.len() {
                    for j in 0..x.len() {
                        acc += x[i].conj() * matrix[(i, j)] * x[j];
                    }
                }
                acc.re
            }
        }
    }

    /// `O ψ`, used for likelihood gradients.
    pub fn apply(&self, psi: &ComplexVector) -> Vec<C64> {
        match self {
            Observation::RankOne { vector, .. } => {
                let c = vector.inner(psi);
                vector.entries().iter().map(|v| v * c).collect()
            }
            Observation::General { matrix } => {
                let x = psi.entries();
                (0..x.len())
                    .map(|i| (0..x.len()).map(|j| matrix[(i, j)] * x[j]).sum())
                    .collect()
            }
        }
    }

    pub fn exact_vector(&self) -> Option<&ExactVector> {
        match self {
            Observation::RankOne { exact, .. } => exact.as_ref(),
            Observation::General { .. } => None,
        }
    }

    /// Exact squared overlap with an exact state, when both are available.
    pub fn exact_expectation(&self, psi: &ExactVector) -> Option<BigRational> {
        self.exact_vector().map(|v| v.overlap_sqr(psi))
    }
}

/// Build the rank-one observation `|v⟩⟨v| / |v|^2`.
pub fn projector_from_vector(v: &ComplexVector) -> Result<Observation> {
    let vector = v.normalized()?;
    Ok(Observation::RankOne { vector, exact: None })
}

/// Observations with integer multiplicities over a common dimension.
#[derive(Clone, Debug)]
pub struct ObservationSet {
    d: usize,
    items: Vec<(Observation, u64)>,
}

impl ObservationSet {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dimension must be >= 1"));
        }
        Ok(Self { d, items: Vec::new() })
    }

    pub fn from_items(d: usize, items: Vec<(Observation, u64)>) -> Result<Self> {
        let mut s = Self::new(d)?;
        for (o, m) in items {
            s.push(o, m)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, obs: Observation, mult: u64) -> Result<()> {
        if obs.dim() != self.d {
            return Err(Error::invalid(format!(
                "observation has dimension {} but the set has {}",
                obs.dim(),
                self.d
            )));
        }
        if mult == 0 {
            return Err(Error::invalid("multiplicity must be >= 1"));
        }
        self.items.push((obs, mult));
        Ok(())
    }

    pub fn extend(&mut self, other: &ObservationSet) -> Result<()> {
        for (o, m) in &other.items {
            self.push(o.clone(), *m)?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn items(&self) -> &[(Observation, u64)] {
        &self.items
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Number of observations after expanding multiplicities.
    pub fn expanded_len(&self) -> u64 {
        self.items.iter().map(|(_, m)| m).sum()
    }

    /// Every multiplicity multiplied by `reps`.
    pub fn repeated(&self, reps: u64) -> Self {
        Self {
            d: self.d,
            items: self.items.iter().map(|(o, m)| (o.clone(), m * reps)).collect(),
        }
    }

    /// Observations in order, one entry per unit of multiplicity.
    pub fn expanded(&self) -> impl Iterator<Item = &Observation> {
        self.items
            .iter()
            .flat_map(|(o, m)| std::iter::repeat_n(o, *m as usize))
    }

    /// Split off one unit of the last item: `(rest, last)`.
    pub fn split_last(&self) -> Option<(ObservationSet, Observation)> {
        let (last, m) = self.items.last()?;
        let mut rest = self.clone();
        if *m > 1 {
            rest.items.last_mut().unwrap().1 -= 1;
        } else {
            rest.items.pop();
        }
        Some((rest, last.clone()))
    }

    pub fn all_exact(&self) -> bool {
        self.items.iter().all(|(o, _)| o.exact_vector().is_some())
    }

    pub fn all_rank_one(&self) -> bool {
        self.items.iter().all(|(o, _)| matches!(o, Observation::RankOne { .. }))
    }
}

fn check_dims(psi: &PureState, obs: &ObservationSet) -> Result<()> {
    if psi.dim() != obs.dim() {
        return Err(Error::invalid(format!(
            "state has dimension {} but observations have {}",
            psi.dim(),
            obs.dim()
        )));
    }
    Ok(())
}

/// `Σ m ln⟨ψ|O|ψ⟩`; `-inf` when any factor vanishes.
pub fn log_likelihood(psi: &PureState, obs: &ObservationSet) -> Result<f64> {
    check_dims(psi, obs)?;
    Ok(log_likelihood_unchecked(psi.vector(), obs))
}

pub(crate) fn log_likelihood_unchecked(psi: &ComplexVector, obs: &ObservationSet) -> f64 {
    let mut acc = 0.0;
    for (o, m) in obs.items() {
        let e = o.expectation(psi);
        if e <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += *m as f64 * e.ln();
    }
    acc
}

/// Linear-scale likelihood, for small instances only.
pub fn likelihood(psi: &ComplexVector, obs: &ObservationSet) -> f64 {
    obs.items()
        .iter()
        .map(|(o, m)| o.expectation(psi).max(0.0).powi(*m as i32))
        .product()
}

/// Exact likelihood at an exact state. Fails if the state or any observation
/// lacks an exact form.
pub fn exact_likelihood(psi: &PureState, obs: &ObservationSet) -> Result<ExactLikelihood> {
    check_dims(psi, obs)?;
    let x = psi
        .exact()
        .ok_or_else(|| Error::invalid("state has no exact representation"))?;
    let mut acc = ExactLikelihood::one();
    for (o, m) in obs.items() {
        let e = o
            .exact_expectation(x)
            .ok_or_else(|| Error::invalid("observation has no exact representation"))?;
        acc = &acc * &ExactLikelihood::from_rational(&e).powu(*m);
        if acc.is_zero() {
            break;
        }
    }
    Ok(acc)
}

/// One round of basic observations: `|k⟩` for every `k`, then
/// `(|j⟩ ± i|k⟩)/√2` for every pair `j < k`; `d²` projectors in all.
pub fn basic_observation_set(d: usize) -> Result<ObservationSet> {
    if d < 2 {
        return Err(Error::invalid("basic observations need d >= 2"));
    }
    let mut set = ObservationSet::new(d)?;
    for k in 0..d {
        let mut re = vec![0; d];
        re[k] = 1;
        set.push(Observation::rank_one_exact(ExactVector::from_real_ints(&re))?, 1)?;
    }
    for j in 0..d {
        for k in (j + 1)..d {
            for sign in [1, -1] {
                let mut re = vec![0; d];
                let mut im = vec![0; d];
                re[j] = 1;
                im[k] = sign;
                set.push(Observation::rank_one_exact(ExactVector::from_ints(&re, &im))?, 1)?;
            }
        }
    }
    Ok(set)
}

/// Signs `(+1, s_2, …, s_d)`; the first entry fixes the global phase.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::invalid("sign vector must be nonempty"));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::invalid("signs must be +1 or -1"));
        }
        if signs[0] != 1 {
            return Err(Error::invalid("first sign is fixed to +1"));
        }
        Ok(Self(signs))
    }

    /// The `index`-th sign vector in lexicographic order with `+` before `-`.
    pub fn from_index(d: usize, index: u64) -> Self {
        let signs = (0..d)
            .map(|i| {
                if i == 0 {
                    1
                } else if (index >> (d - 1 - i)) & 1 == 1 {
                    -1
                } else {
                    1
                }
            })
            .collect();
        Self(signs)
    }

    /// All `2^(d-1)` sign vectors in lexicographic order.
    pub fn all(d: usize) -> impl Iterator<Item = SignVector> {
        let count = 1u64 << (d.saturating_sub(1));
        (0..count).map(move |i| SignVector::from_index(d, i))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }
}

impl PartialOrd for SignVector {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SignVector {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // `+` sorts before `-`.
        other.0.cmp(&self.0)
    }
}

/// Binarized state `Σ s_k |k⟩ / √d`.
pub fn b0_state(s: &SignVector) -> PureState {
    let ints: Vec<i64> = s.signs().iter().map(|&x| x as i64).collect();
    PureState::from_exact(ExactVector::from_real_ints(&ints)).expect("sign vectors are nonzero")
}

/// Amplitude/phase coordinates of a pure state:
/// `ψ_k = √(α_k/d) · e^{iπ(θ_k + n_k)}` with the gauge entry real positive.
#[derive(Clone, Debug, PartialEq)]
pub struct StateCoords {
    pub alpha: Vec<f64>,
    pub theta: Vec<f64>,
    pub n: Vec<bool>,
    /// Index of the entry used to fix the global phase (normally 0).
    pub gauge: usize,
}

impl StateCoords {
    pub fn to_state(&self) -> Result<PureState> {
        let d = self.alpha.len() as f64;
        let v: Vec<C64> = self
            .alpha
            .iter()
            .zip(&self.theta)
            .zip(&self.n)
            .map(|((&a, &t), &n)| {
                let phase = std::f64::consts::PI * (t + if n { 1.0 } else { 0.0 });
                Complex::from_polar((a.max(0.0) / d).sqrt(), phase)
            })
            .collect();
        PureState::from_unnormalized(ComplexVector::new(v)?)
    }

    /// Euclidean distance of `alpha` from the all-ones vector.
    pub fn alpha_deviation(&self) -> f64 {
        self.alpha.iter().map(|a| (a - 1.0).powi(2)).sum::<f64>().sqrt()
    }
}

/// Coordinates of `psi`. The first nonzero entry is rotated to be real and
/// positive; its index is recorded in `gauge`.
pub fn state_coords(psi: &PureState) -> StateCoords {
    let x = psi.vector().entries();
    let d = x.len();
    let gauge = x.iter().position(|z| z.norm() > 0.0).unwrap_or(0);
    let rot = if x[gauge].norm() > 0.0 { x[gauge].conj() / x[gauge].norm() } else { Complex::new(1.0, 0.0) };
    let mut alpha = Vec::with_capacity(d);
    let mut theta = Vec::with_capacity(d);
    let mut n = Vec::with_capacity(d);
    for (k, z) in x.iter().enumerate() {
        let z = z * rot;
        alpha.push(d as f64 * z.norm_sqr());
        if k == gauge || z.norm() == 0.0 {
            theta.push(0.0);
            n.push(false);
            continue;
        }
        // phase / π in (-1, 1]
        let phi = z.arg() / std::f64::consts::PI;
        let (t, bit) = if (-0.5..0.5).contains(&phi) {
            (phi, false)
        } else if phi >= 0.5 {
            (phi - 1.0, true)
        } else {
            (phi + 1.0, true)
        };
        // Keep θ in [-1/2, 1/2) after rounding.
        let (t, bit) = if t >= 0.5 { (t - 1.0, !bit) } else { (t, bit) };
        theta.push(t);
        n.push(bit);
    }
    StateCoords { alpha, theta, n, gauge }
}

/// Nearest binarized state (up to global phase) and the distance to it.
/// Ties go to the lexicographically smallest sign vector.
pub fn dist_to_b0(psi: &PureState) -> (SignVector, f64) {
    let d = psi.dim();
    let x = psi.vector().entries();
    let scale = 1.0 / (d as f64).sqrt();
    let mut best: Option<(SignVector, f64)> = None;
    for s in SignVector::all(d) {
        let ov: C64 = s
            .signs()
            .iter()
            .zip(x)
            .map(|(&sg, z)| z * (sg as f64 * scale))
            .sum();
        let ov = ov.norm();
        if best.as_ref().is_none_or(|(_, b)| ov > *b) {
            best = Some((s, ov));
        }
    }
    let (s, ov) = best.expect("at least one sign vector");
    (s, (2.0 - 2.0 * ov.min(1.0)).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn projector_normalizes() {
        let obs = projector_from_vector(&ComplexVector::from_real(&[1.0, 1.0, -2.0]).unwrap()).unwrap();
        let Observation::RankOne { vector, .. } = &obs else { panic!() };
        assert_abs_diff_eq!(vector.entries()[2].re, -2.0 / 6f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(obs.trace(), 1.0);
        let y = projector_from_vector(
            &ComplexVector::from_parts(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
        )
        .unwrap();
        assert_abs_diff_eq!(y.matrix().trace().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_vector_is_rejected() {
        let z = ComplexVector::from_real(&[0.0, 0.0]).unwrap();
        assert!(matches!(projector_from_vector(&z), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn basic_set_sizes() {
        for d in 2..=5 {
            assert_eq!(basic_observation_set(d).unwrap().items().len(), d * d);
        }
        assert!(basic_observation_set(1).is_err());
    }

    #[test]
    fn basic_round_at_b0_is_d_to_minus_d_squared() {
        for d in 2..=5usize {
            let basic = basic_observation_set(d).unwrap();
            for s in SignVector::all(d) {
                let psi = b0_state(&s);
                let exact = exact_likelihood(&psi, &basic).unwrap();
                let expected = rat(1, (d as i64).pow((d * d) as u32));
                assert_eq!(exact.to_rational().unwrap(), expected);
                let ll = log_likelihood(&psi, &basic).unwrap();
                assert_abs_diff_eq!(ll, -((d * d) as f64) * (d as f64).ln(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn certain_and_impossible_outcomes() {
        let psi = PureState::new(ComplexVector::basis(2, 0)).unwrap();
        let mut obs = ObservationSet::new(2).unwrap();
        obs.push(projector_from_vector(&ComplexVector::basis(2, 0)).unwrap(), 5).unwrap();
        assert_eq!(log_likelihood(&psi, &obs).unwrap(), 0.0);
        let mut orth = ObservationSet::new(2).unwrap();
        orth.push(projector_from_vector(&ComplexVector::basis(2, 1)).unwrap(), 1).unwrap();
        assert_eq!(log_likelihood(&psi, &orth).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn dimension_mismatch_is_invalid_input() {
        let psi = PureState::new(ComplexVector::basis(3, 0)).unwrap();
        let obs = basic_observation_set(2).unwrap();
        assert!(matches!(log_likelihood(&psi, &obs), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn b0_count_and_entries() {
        assert_eq!(SignVector::all(4).count(), 8);
        let psi = b0_state(&SignVector::new(vec![1, 1]).unwrap());
        assert_abs_diff_eq!(psi.vector().entries()[1].re, 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert!(SignVector::new(vec![-1, 1]).is_err());
    }

    #[test]
    fn coords_of_special_states() {
        let c = state_coords(&b0_state(&SignVector::new(vec![1, 1, 1]).unwrap()));
        for a in &c.alpha {
            assert_abs_diff_eq!(*a, 1.0, epsilon = 1e-12);
        }
        assert!(c.theta.iter().all(|t| t.abs() < 1e-12));
        assert!(c.n.iter().all(|b| !b));

        let c = state_coords(&PureState::new(ComplexVector::basis(2, 0)).unwrap());
        assert_eq!(c.alpha, vec![2.0, 0.0]);

        let c = state_coords(&b0_state(&SignVector::new(vec![1, -1]).unwrap()));
        assert_eq!(c.n, vec![false, true]);
        assert!(c.theta.iter().all(|t| t.abs() < 1e-12));
    }

    #[test]
    fn coords_gauge_on_first_nonzero_entry() {
        let psi = PureState::from_unnormalized(
            ComplexVector::from_parts(&[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]).unwrap(),
        )
        .unwrap();
        let c = state_coords(&psi);
        assert_eq!(c.gauge, 1);
        let back = c.to_state().unwrap();
        assert!(back.phase_distance(&psi) < 1e-12);
    }

    #[test]
    fn distance_to_b0_closed_forms() {
        let (_, dist) = dist_to_b0(&b0_state(&SignVector::new(vec![1, -1, 1]).unwrap()));
        assert!(dist < 1e-7);
        let (s, dist) = dist_to_b0(&PureState::new(ComplexVector::basis(2, 0)).unwrap());
        // Both points tie; the `+` one wins.
        assert_eq!(s.signs(), &[1, 1]);
        assert_abs_diff_eq!(dist, (2.0 - 2f64.sqrt()).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn distance_matches_phase_grid_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let psi = PureState::haar_random(3, &mut rng);
            let (_, dist) = dist_to_b0(&psi);
            let mut brute = f64::INFINITY;
            for s in SignVector::all(3) {
                let b = b0_state(&s);
                for k in 0..20_000 {
                    let phi = std::f64::consts::TAU * k as f64 / 20_000.0;
                    brute = brute.min(psi.with_phase(phi).vector().distance(b.vector()));
                }
            }
            assert!(brute >= dist - 1e-12);
            assert!(brute - dist < 1e-3, "grid {brute} vs closed form {dist}");
        }
    }
}
