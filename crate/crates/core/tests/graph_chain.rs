use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use qbu_core::graphred::{
    bipartite_lift, compile_dcc_to_qbu, count_cycle_covers, count_double_cycle_covers, double_cover_dp, double_graph,
    pairing_polynomial, search_gadget, CoverWeight, Edge, Evaluator, Terminals, WeightedDigraph,
};
use qbu_core::matchperm::permanent;

fn graph(n: usize, weights: &[i64]) -> WeightedDigraph {
    let edges = (0..n * n)
        .filter(|&k| weights[k] != 0)
        .map(|k| Edge { from: k / n, to: k % n, weight: BigRational::from_integer(weights[k].into()) })
        .collect();
    WeightedDigraph::new(n, edges).unwrap()
}

fn arb_graph(max_n: usize, max_w: i64) -> impl Strategy<Value = WeightedDigraph> {
    (1..=max_n).prop_flat_map(move |n| prop::collection::vec(0..=max_w, n * n).prop_map(move |w| graph(n, &w)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn cycle_covers_are_the_permanent(g in arb_graph(6, 4)) {
        prop_assert_eq!(count_cycle_covers(&g).unwrap(), permanent(&g.adjacency()).unwrap());
    }

    #[test]
    fn lift_matchings_are_the_permanent(g in arb_graph(5, 3)) {
        let a = g.adjacency();
        prop_assert_eq!(bipartite_lift(&a).perfect_matchings().unwrap(), permanent(&a).unwrap());
    }

    #[test]
    fn frontier_dp_matches_enumeration(g in arb_graph(4, 2), twin in any::<bool>()) {
        let w = if twin { CoverWeight::Twin } else { CoverWeight::Plain };
        prop_assert_eq!(double_cover_dp(&g, None, w).unwrap(), count_double_cycle_covers(&g, None, w).unwrap());
    }

    #[test]
    fn double_graph_counts_twin_weighted_covers(g in arb_graph(3, 3)) {
        let lhs = count_cycle_covers(&double_graph(&g)).unwrap();
        let rhs = count_double_cycle_covers(&g, None, CoverWeight::Twin).unwrap() * BigRational::from_integer(BigInt::from(1u32 << g.n()));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn top_pairing_coefficient_is_the_double_graph_permanent(g in arb_graph(3, 2)) {
        let p = pairing_polynomial(&g).unwrap();
        let top = p.get(2 * g.n()).cloned().unwrap_or_else(BigInt::zero);
        prop_assert!(p.len() <= 2 * g.n() + 1);
        let want = count_cycle_covers(&double_graph(&g)).unwrap();
        prop_assert_eq!(BigRational::from_integer(top), want);
    }
}

#[test]
fn plain_doubling_fails_on_two_vertices() {
    let g = WeightedDigraph::unit(2, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
    let covers = count_cycle_covers(&double_graph(&g)).unwrap();
    let plain = count_double_cycle_covers(&g, None, CoverWeight::Plain).unwrap();
    assert_eq!(covers, BigRational::from_integer(24.into()));
    assert_eq!(plain * BigRational::from_integer(4.into()), BigRational::from_integer(12.into()));
}

/// Two gadget copies in series through a looped join vertex.
fn series(copies: usize) -> WeightedDigraph {
    let gadget = search_gadget(5).unwrap();
    let interior = gadget.interior_size();
    let n = 2 + (copies - 1) + copies * interior;
    let mut edges = Vec::new();
    let joins: Vec<usize> = (0..copies - 1).map(|k| 2 + k).collect();
    for j in &joins {
        edges.push(Edge { from: *j, to: *j, weight: BigRational::one() });
    }
    for k in 0..copies {
        let entry = if k == 0 { 0 } else { joins[k - 1] };
        let exit = if k + 1 == copies { 1 } else { joins[k] };
        let base = 2 + (copies - 1) + k * interior;
        let map = |x: usize| match x {
            x if x == gadget.s => entry,
            x if x == gadget.t => exit,
            i => base + i - 2,
        };
        edges.extend(gadget.graph.edges().iter().map(|e| Edge { from: map(e.from), to: map(e.to), weight: e.weight.clone() }));
    }
    WeightedDigraph::new(n, edges).unwrap()
}

#[test]
fn chained_gadgets_multiply_profiles() {
    for copies in 1..=3u32 {
        let g = series(copies as usize);
        let counts: Vec<BigRational> =
            (0..3).map(|f| double_cover_dp(&g, Some(Terminals { s: 0, t: 1, flow: f }), CoverWeight::Plain).unwrap()).collect();
        let want: Vec<BigRational> = [3u64, 4, 3].iter().map(|c| BigRational::from_integer(BigInt::from(c.pow(copies)))).collect();
        assert_eq!(counts, want, "{copies} copies");
    }
}

#[test]
fn dense_and_structured_plans_agree() {
    let g = WeightedDigraph::unit(2, &[(0, 1), (1, 0), (1, 1)]).unwrap();
    let plan = compile_dcc_to_qbu(&g).unwrap();
    let a = plan.execute(Evaluator::Structured).unwrap();
    assert_eq!(a.count, count_cycle_covers(&g).unwrap());
    let small = qbu_core::graphred::compile_dcc_to_qbu_with(
        &WeightedDigraph::unit(1, &[(0, 0)]).unwrap(),
        &qbu_core::graphred::CompileOptions { links: Some(1), gadget: None },
    )
    .unwrap();
    let d = small.execute(Evaluator::Dense).unwrap();
    let s = small.execute(Evaluator::Structured).unwrap();
    assert_eq!(d.leading, s.leading);
}

#[test]
fn rational_weights_are_unscaled() {
    let g = WeightedDigraph::new(
        2,
        vec![
            Edge { from: 0, to: 1, weight: BigRational::new(1.into(), 2.into()) },
            Edge { from: 1, to: 0, weight: BigRational::new(3.into(), 1.into()) },
            Edge { from: 0, to: 0, weight: BigRational::new(1.into(), 3.into()) },
            Edge { from: 1, to: 1, weight: BigRational::new(1.into(), 1.into()) },
        ],
    )
    .unwrap();
    let plan = compile_dcc_to_qbu(&g).unwrap();
    assert_eq!(plan.execute(Evaluator::Structured).unwrap().count, count_cycle_covers(&g).unwrap());
}
