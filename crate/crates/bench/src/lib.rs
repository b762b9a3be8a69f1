//! Seeded inputs shared by the benchmarks.

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qbu_core::hilbert::projector_from_vector;
use qbu_core::matchperm::SquareMatrix;
use qbu_core::{ObservationSet, PureState, WeightedDigraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n × n` matrix with integer entries in `-3..=3`.
pub fn int_matrix(n: usize, seed: u64) -> SquareMatrix<BigRational> {
    let mut r = rng(seed);
    SquareMatrix::from_fn(n, |_, _| BigRational::from_integer(r.random_range(-3i64..=3).into()))
}

pub fn float_matrix(n: usize, seed: u64) -> SquareMatrix<f64> {
    let mut r = rng(seed);
    SquareMatrix::from_fn(n, |_, _| r.random_range(-1.0..1.0))
}

/// Symmetric version of [`float_matrix`].
pub fn symmetric_matrix(n: usize, seed: u64) -> SquareMatrix<f64> {
    let m = float_matrix(n, seed);
    SquareMatrix::from_fn(n, |i, j| if i <= j { *m.get(i, j) } else { *m.get(j, i) })
}

/// `n` Haar-random rank-one observations in dimension `d`.
pub fn observations(d: usize, n: usize, seed: u64) -> ObservationSet {
    let mut r = rng(seed);
    let mut set = ObservationSet::new(d).expect("d >= 1");
    for _ in 0..n {
        let psi = PureState::haar_random(d, &mut r);
        set.push(projector_from_vector(psi.vector()).expect("unit vector"), 1).expect("matching dimension");
    }
    set
}

/// Random 0/1 digraph on `n` vertices.
pub fn unit_digraph(n: usize, seed: u64) -> WeightedDigraph {
    let mut r = rng(seed);
    let arcs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|_| r.random_bool(0.5)).collect();
    WeightedDigraph::unit(n, &arcs).expect("arcs in range")
}
