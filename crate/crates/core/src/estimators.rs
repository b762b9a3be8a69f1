//! Bayesian mean state, posterior density, observable expectations and a
//! multi-start likelihood maximizer.

use nalgebra::DMatrix;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{
    b0_state, log_likelihood_unchecked, projector_from_vector, ComplexVector, ObservationSet, PureState,
    SignVector, C64,
};
use crate::sphere::{
    likelihood_polynomial_with_extra, pnorm_exact, Coefficient, ExpansionConfig, LikelihoodPolynomial,
    RealPolynomial,
};

const DENSITY_TOL: f64 = 1e-9;

/// A `d × d` density matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
    exact: Option<Vec<Vec<Complex<BigRational>>>>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        check_hermitian(&matrix, 1e-10)?;
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::invalid(format!("density matrix has trace {tr}")));
        }
        let min = matrix.clone().symmetric_eigen().eigenvalues.min();
        if min < -DENSITY_TOL {
            return Err(Error::invalid(format!("density matrix has eigenvalue {min}")));
        }
        Ok(Self { matrix, exact: None })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Exact entries, present when every observation was exact.
    pub fn exact(&self) -> Option<&Vec<Vec<Complex<BigRational>>>> {
        self.exact.as_ref()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Tr[A ρ]`.
    pub fn expectation(&self, a: &DMatrix<C64>) -> f64 {
        (a * &self.matrix).trace().re
    }

    /// `⟨v|ρ|v⟩`.
    pub fn quadratic(&self, v: &ComplexVector) -> f64 {
        let x = v.entries();
        let d = self.dim();
        let mut acc = C64::zero();
        for i in 0..d {
            for j in 0..d {
                acc += x[i].conj() * self.matrix[(i, j)] * x[j];
            }
        }
        acc.re
    }
}

fn check_hermitian(m: &DMatrix<C64>, tol: f64) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::invalid("matrix must be square and nonempty"));
    }
    for i in 0..m.nrows() {
        for j in 0..m.nrows() {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > tol {
                return Err(Error::invalid("matrix is not Hermitian"));
            }
        }
    }
    Ok(())
}

/// Integrals of `ψ_i conj(ψ_j) L(ψ)` (real and imaginary parts) for `i ≤ j`,
/// plus the integral of `L` itself, all without the shared `π^d` factor.
/// `((i, j), re, im)` for one second moment.
type Moment<C> = ((usize, usize), C, C);

fn moment_integrals<C: Coefficient>(p: &RealPolynomial<C>, d: usize) -> (Vec<Moment<C>>, C) {
    let (z, _) = p.sphere_integral();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let out = pairs
        .into_par_iter()
        .map(|(i, j)| {
            // ψ_i conj(ψ_j) = (a_i a_j + b_i b_j) + i (b_i a_j − a_i b_j)
            let (re, _) = p.sphere_integral_with_quadratic(&[(i, j, C::one()), (d + i, d + j, C::one())]);
            let im = if i == j {
                C::zero()
            } else {
                p.sphere_integral_with_quadratic(&[(d + i, j, C::one()), (i, d + j, -C::one())]).0
            };
            ((i, j), re, im)
        })
        .collect();
    (out, z)
}

/// Posterior mean state `ρ_Avg` under the Haar prior on pure states.
pub fn rho_avg(obs: &ObservationSet, cfg: &ExpansionConfig) -> Result<DensityMatrix> {
    let d = obs.dim();
    let exp = likelihood_polynomial_with_extra(obs, 2, cfg)?;
    let zero_err = || Error::invalid("observations have zero total probability");
    let mut m = DMatrix::from_element(d, d, C64::zero());
    let exact = match &exp.polynomial {
        LikelihoodPolynomial::Exact(p) => {
            let (entries, z) = moment_integrals(p, d);
            if z.is_zero() {
                return Err(zero_err());
            }
            let mut ex = vec![vec![Complex::new(BigRational::zero(), BigRational::zero()); d]; d];
            for ((i, j), re, im) in entries {
                let v = Complex::new(re / z.clone(), im / z.clone());
                m[(i, j)] = C64::new(v.re.as_f64(), v.im.as_f64());
                m[(j, i)] = m[(i, j)].conj();
                ex[j][i] = v.conj();
                ex[i][j] = v;
            }
            Some(ex)
        }
        LikelihoodPolynomial::Float(p) => {
            let (entries, z) = moment_integrals(p, d);
            if z == 0.0 {
                return Err(zero_err());
            }
            for ((i, j), re, im) in entries {
                m[(i, j)] = C64::new(re / z, im / z);
                m[(j, i)] = m[(i, j)].conj();
            }
            None
        }
    };
    let mut rho = DensityMatrix::new(m)?;
    rho.exact = exact;
    Ok(rho)
}

/// Posterior density at `psi` with respect to the Haar probability measure.
pub fn posterior_density(obs: &ObservationSet, psi: &PureState, cfg: &ExpansionConfig) -> Result<f64> {
    let l = crate::hilbert::log_likelihood(psi, obs)?;
    let p = pnorm_exact(obs, cfg)?;
    if p.normalized <= 0.0 {
        return Err(Error::invalid("observations have zero total probability"));
    }
    Ok((l - p.normalized.ln()).exp())
}

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
pub fn hermitian_eigen(a: &DMatrix<C64>) -> Result<Vec<(f64, ComplexVector)>> {
    check_hermitian(a, 1e-10)?;
    let eig = a.clone().symmetric_eigen();
    let mut pairs: Vec<(f64, ComplexVector)> = (0..a.nrows())
        .map(|k| {
            let v: Vec<C64> = eig.eigenvectors.column(k).iter().copied().collect();
            (eig.eigenvalues[k], ComplexVector::new(v).expect("eigenvectors are finite"))
        })
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    Ok(pairs)
}

/// `Σ λ_i p(obs ∪ {|i⟩⟨i|}) / p(obs)` over the spectral decomposition of `a`.
pub fn observable_expectation(obs: &ObservationSet, a: &DMatrix<C64>, cfg: &ExpansionConfig) -> Result<f64> {
    if a.nrows() != obs.dim() {
        return Err(Error::invalid("observable dimension does not match the observations"));
    }
    let eig = hermitian_eigen(a)?;
    let base = pnorm_exact(obs, cfg)?.normalized;
    if base <= 0.0 {
        return Err(Error::invalid("observations have zero total probability"));
    }
    let mut total = 0.0;
    for (lambda, v) in eig {
        if lambda == 0.0 {
            continue;
        }
        let mut ext = obs.clone();
        ext.push(projector_from_vector(&v)?, 1)?;
        total += lambda * pnorm_exact(&ext, cfg)?.normalized;
    }
    Ok(total / base)
}

/// Haar-normalized `p_norm(obs)` computed as `p_norm(rest) · Tr[O_last ρ_Avg(rest)]`,
/// with the last observation decomposed into weighted projectors.
pub fn pnorm_from_rho_avg(obs: &ObservationSet, cfg: &ExpansionConfig) -> Result<f64> {
    let (rest, last) = obs.split_last().ok_or_else(|| Error::invalid("need at least one observation"))?;
    let rho = rho_avg(&rest, cfg)?;
    let base = pnorm_exact(&rest, cfg)?.normalized;
    let factor: f64 = hermitian_eigen(&last.matrix())?
        .iter()
        .map(|(mu, v)| mu * rho.quadratic(v))
        .sum();
    Ok(base * factor)
}

/// Result of a likelihood search.
#[derive(Clone, Debug, Serialize)]
pub struct MleResult {
    #[serde(skip)]
    pub state: PureState,
    pub log_likelihood: f64,
    pub starts: usize,
    pub best_start: usize,
}

const MAX_ITERS: usize = 5000;

fn ascend(obs: &ObservationSet, start: ComplexVector) -> (ComplexVector, f64) {
    let mut x = start;
    let mut f = log_likelihood_unchecked(&x, obs);
    if !f.is_finite() {
        return (x, f);
    }
    let d = x.dim();
    let mut step = 0.1;
    for _ in 0..MAX_ITERS {
        // ∇ ln⟨x|O|x⟩ = 2 O x / ⟨x|O|x⟩ in the real embedding
        let mut g = vec![C64::zero(); d];
        for (o, m) in obs.items() {
            let e = o.expectation(&x);
            let ox = o.apply(&x);
            let w = 2.0 * *m as f64 / e;
            for (gi, oi) in g.iter_mut().zip(ox) {
                *gi += oi * w;
            }
        }
        let radial: f64 = x.entries().iter().zip(&g).map(|(a, b)| (a.conj() * b).re).sum();
        for (gi, xi) in g.iter_mut().zip(x.entries()) {
            *gi -= xi * radial;
        }
        let gnorm = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if gnorm < 1e-13 {
            break;
        }
        let mut improved = false;
        while step > 1e-16 {
            let cand: Vec<C64> = x.entries().iter().zip(&g).map(|(a, b)| a + b * (step / gnorm)).collect();
            let cand = ComplexVector::new(cand).and_then(|c| c.normalized());
            if let Ok(c) = cand {
                let fc = log_likelihood_unchecked(&c, obs);
                if fc > f {
                    let gain = fc - f;
                    x = c;
                    f = fc;
                    improved = gain > 1e-15;
                    step *= 1.5;
                    break;
                }
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, f)
}

/// Best state found by projected gradient ascent of `ln L` from Haar-random
/// starts and, for `d ≤ 12`, every `B₀` point. Deterministic per seed. The
/// value is a lower bound on the maximum, not a certificate.
pub fn maximize_likelihood(obs: &ObservationSet, restarts: usize, seed: u64) -> Result<MleResult> {
    if restarts == 0 {
        return Err(Error::invalid("need at least one restart"));
    }
    let d = obs.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<ComplexVector> =
        (0..restarts).map(|_| PureState::haar_random(d, &mut rng).vector().clone()).collect();
    if d <= 12 {
        starts.extend(SignVector::all(d).map(|s| b0_state(&s).vector().clone()));
    }
    // Points where the likelihood vanishes have no gradient; nudge them.
    let starts: Vec<ComplexVector> = starts
        .into_iter()
        .map(|s| {
            if log_likelihood_unchecked(&s, obs).is_finite() {
                return s;
            }
            let nudged: Vec<C64> = s
                .entries()
                .iter()
                .map(|z| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    z + C64::new(re, im) * 1e-3
                })
                .collect();
            ComplexVector::new(nudged).and_then(|v| v.normalized()).unwrap_or(s)
        })
        .collect();
    let results: Vec<(ComplexVector, f64)> = starts.into_par_iter().map(|s| ascend(obs, s)).collect();
    let mut best = 0;
    for (k, r) in results.iter().enumerate() {
        if r.1 > results[best].1 {
            best = k;
        }
    }
    let (x, f) = results[best].clone();
    Ok(MleResult { state: PureState::from_unnormalized(x)?, log_likelihood: f, starts: results.len(), best_start: best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::hilbert::basic_observation_set;
    use approx::assert_relative_eq;

    fn proj0(d: usize, k: u64) -> ObservationSet {
        let mut o = ObservationSet::new(d).unwrap();
        if k > 0 {
            o.push(projector_from_vector(&ComplexVector::basis(d, 0)).unwrap(), k).unwrap();
        }
        o
    }

    fn exact_proj0(d: usize, k: u64) -> ObservationSet {
        let mut o = ObservationSet::new(d).unwrap();
        let mut e = vec![0i64; d];
        e[0] = 1;
        o.push(crate::hilbert::Observation::rank_one_exact(crate::exact::ExactVector::from_real_ints(&e)).unwrap(), k)
            .unwrap();
        o
    }

    #[test]
    fn empty_gives_maximally_mixed() {
        let cfg = ExpansionConfig::default();
        for d in 1..=4 {
            let rho = rho_avg(&ObservationSet::new(d).unwrap(), &cfg).unwrap();
            for i in 0..d {
                for j in 0..d {
                    let want = if i == j { 1.0 / d as f64 } else { 0.0 };
                    assert_relative_eq!(rho.matrix()[(i, j)].re, want, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn repeated_projector_concentrates() {
        // Under Haar on C^2, |x_0|^2 is uniform on [0,1], so ⟨0|ρ|0⟩ = (k+1)/(k+2).
        let cfg = ExpansionConfig::default();
        for k in 1..=6u64 {
            let rho = rho_avg(&exact_proj0(2, k), &cfg).unwrap();
            assert_eq!(rho.exact().unwrap()[0][0].re, rat(k as i64 + 1, k as i64 + 2));
        }
    }

    #[test]
    fn posterior_examples() {
        let cfg = ExpansionConfig::default();
        let psi = PureState::new(ComplexVector::basis(2, 0)).unwrap();
        assert_relative_eq!(posterior_density(&ObservationSet::new(2).unwrap(), &psi, &cfg).unwrap(), 1.0);
        assert_relative_eq!(posterior_density(&proj0(2, 1), &psi, &cfg).unwrap(), 2.0, max_relative = 1e-12);
        let orth = PureState::new(ComplexVector::basis(2, 1)).unwrap();
        assert_eq!(posterior_density(&proj0(2, 1), &orth, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn expectation_examples() {
        let cfg = ExpansionConfig::default();
        let id = DMatrix::<C64>::identity(3, 3);
        assert_relative_eq!(observable_expectation(&proj0(3, 2), &id, &cfg).unwrap(), 1.0, max_relative = 1e-12);
        let mut a = DMatrix::<C64>::zeros(3, 3);
        a[(0, 0)] = C64::new(1.0, 0.0);
        assert_relative_eq!(
            observable_expectation(&ObservationSet::new(3).unwrap(), &a, &cfg).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn pnorm_chain_matches_direct() {
        let cfg = ExpansionConfig::default();
        let o = proj0(2, 1);
        assert_relative_eq!(pnorm_from_rho_avg(&o, &cfg).unwrap(), 0.5, max_relative = 1e-9);
        let b = basic_observation_set(2).unwrap();
        assert_relative_eq!(
            pnorm_from_rho_avg(&b, &cfg).unwrap(),
            pnorm_exact(&b, &cfg).unwrap().normalized,
            max_relative = 1e-9
        );
        let mut g = proj0(2, 1);
        g.push(crate::hilbert::Observation::general(DMatrix::identity(2, 2)).unwrap(), 1).unwrap();
        assert_relative_eq!(pnorm_from_rho_avg(&g, &cfg).unwrap(), 0.5, max_relative = 1e-9);
        assert!(pnorm_from_rho_avg(&ObservationSet::new(2).unwrap(), &cfg).is_err());
    }

    #[test]
    fn mle_examples() {
        let r = maximize_likelihood(&proj0(2, 10), 4, 1).unwrap();
        assert!(r.log_likelihood > -1e-6);
        let b = basic_observation_set(2).unwrap();
        let r = maximize_likelihood(&b, 4, 1).unwrap();
        assert_relative_eq!(r.log_likelihood, -4.0 * 2f64.ln(), epsilon = 1e-9);
        let again = maximize_likelihood(&b, 4, 1).unwrap();
        assert_eq!(r.log_likelihood, again.log_likelihood);
    }
}
