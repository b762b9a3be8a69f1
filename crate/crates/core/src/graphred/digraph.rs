use std::collections::{BTreeMap, HashSet};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matchperm::SquareMatrix;

/// Largest graph accepted by [`count_cycle_covers`].
pub const CYCLE_COVER_GUARD: usize = 9;
/// Largest graph accepted by [`count_double_cycle_covers`].
pub const DOUBLE_COVER_GUARD: usize = 8;
/// Largest number of live frontier states in [`double_cover_dp`].
pub const FRONTIER_STATE_GUARD: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: BigRational,
}

/// Directed graph with rational arc weights. Self-loops are allowed, parallel
/// arcs are not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedDigraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedDigraph {
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &edges {
            if e.from >= n || e.to >= n {
                return Err(Error::invalid(format!("arc {}->{} out of range for {n} vertices", e.from, e.to)));
            }
            if !seen.insert((e.from, e.to)) {
                return Err(Error::invalid(format!("parallel arc {}->{}", e.from, e.to)));
            }
        }
        Ok(Self { n, edges })
    }

    /// Graph whose listed arcs all have weight 1.
    pub fn unit(n: usize, arcs: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, arcs.iter().map(|&(from, to)| Edge { from, to, weight: BigRational::one() }).collect())
    }

    /// Graph with an arc for every nonzero entry of a square matrix.
    pub fn from_adjacency(a: &SquareMatrix<BigRational>) -> Self {
        let n = a.size();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if !a.get(i, j).is_zero() {
                    edges.push(Edge { from: i, to: j, weight: a.get(i, j).clone() });
                }
            }
        }
        Self { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn adjacency(&self) -> SquareMatrix<BigRational> {
        let mut a = SquareMatrix::zeros(self.n);
        for e in &self.edges {
            a.set(e.from, e.to, e.weight.clone());
        }
        a
    }

    /// Outgoing arcs of every vertex, in edge-list order.
    pub fn out_arcs(&self) -> Vec<Vec<(usize, BigRational)>> {
        let mut out = vec![Vec::new(); self.n];
        for e in &self.edges {
            out[e.from].push((e.to, e.weight.clone()));
        }
        out
    }

    pub fn max_weight(&self) -> BigRational {
        self.edges.iter().map(|e| e.weight.abs()).fold(BigRational::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn has_negative_weight(&self) -> bool {
        self.edges.iter().any(|e| e.weight.is_negative())
    }

    /// Appends the vertices and arcs of `other`, shifting its indices.
    /// Returns the offset of the first appended vertex.
    pub(crate) fn append(&mut self, other: &WeightedDigraph) -> usize {
        let off = self.n;
        self.n += other.n;
        self.edges.extend(other.edges.iter().map(|e| Edge { from: e.from + off, to: e.to + off, weight: e.weight.clone() }));
        off
    }

    pub(crate) fn push_edge(&mut self, from: usize, to: usize, weight: BigRational) {
        debug_assert!(from < self.n && to < self.n);
        debug_assert!(!self.edges.iter().any(|e| e.from == from && e.to == to));
        self.edges.push(Edge { from, to, weight });
    }
}

/// Weighted cycle covers: `Σ_σ Π_v w(v, σ(v))` over permutations using only
/// arcs of `g`.
pub fn count_cycle_covers(g: &WeightedDigraph) -> Result<BigRational> {
    if g.n > CYCLE_COVER_GUARD {
        return Err(Error::limit(format!("cycle cover count on {} vertices exceeds the guard {CYCLE_COVER_GUARD}", g.n)));
    }
    fn rec(out: &[Vec<(usize, BigRational)>], u: usize, used: &mut [bool], acc: &BigRational, total: &mut BigRational) {
        if u == out.len() {
            *total += acc;
            return;
        }
        for (v, w) in &out[u] {
            if !used[*v] && !w.is_zero() {
                used[*v] = true;
                rec(out, u + 1, used, &(acc * w), total);
                used[*v] = false;
            }
        }
    }
    let mut total = BigRational::zero();
    rec(&g.out_arcs(), 0, &mut vec![false; g.n], &BigRational::one(), &mut total);
    Ok(total)
}

/// Two-terminal boundary condition: `flow` units leave `s` into the graph and
/// arrive at `t`. The terminals carry no other arcs in a cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Terminals {
    pub s: usize,
    pub t: usize,
    pub flow: u8,
}

/// How a double cover is weighted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverWeight {
    /// `Π w^m` over arcs with multiplicity `m`.
    Plain,
    /// Plain weight times 2 for every vertex whose two out-arcs are distinct.
    /// Summed over covers this equals the cycle covers of the double graph
    /// divided by `2^|V|`.
    Twin,
}

fn degree_targets(n: usize, terminals: Option<Terminals>) -> Result<(Vec<u8>, Vec<u8>)> {
    let mut outd = vec![2u8; n];
    let mut ind = vec![2u8; n];
    if let Some(t) = terminals {
        if t.s >= n || t.t >= n || t.s == t.t {
            return Err(Error::invalid("terminals must be two distinct vertices"));
        }
        if t.flow > 2 {
            return Err(Error::invalid("terminal flow must be 0, 1 or 2"));
        }
        outd[t.s] = t.flow;
        ind[t.s] = 0;
        outd[t.t] = 0;
        ind[t.t] = t.flow;
    }
    Ok((outd, ind))
}

/// One way for a vertex to spend its out-degree: target multiplicities and
/// the resulting weight factor.
#[derive(Clone, Debug)]
pub(crate) struct OutChoice<C> {
    pub(crate) targets: Vec<(usize, u8)>,
    pub(crate) factor: C,
}

/// All multisets of size `k ≤ 2` over the given arcs with `Π w^m` weights.
pub(crate) fn out_multisets(arcs: &[(usize, BigRational)], k: u8, weight: CoverWeight) -> Vec<OutChoice<BigRational>> {
    let mut res = Vec::new();
    match k {
        0 => res.push(OutChoice { targets: vec![], factor: BigRational::one() }),
        1 => {
            for (v, w) in arcs {
                res.push(OutChoice { targets: vec![(*v, 1)], factor: w.clone() });
            }
        }
        2 => {
            let twin = match weight {
                CoverWeight::Plain => BigRational::one(),
                CoverWeight::Twin => BigRational::from_integer(2.into()),
            };
            for (i, (v, w)) in arcs.iter().enumerate() {
                res.push(OutChoice { targets: vec![(*v, 2)], factor: w * w });
                for (u, x) in &arcs[i + 1..] {
                    res.push(OutChoice { targets: vec![(*v, 1), (*u, 1)], factor: w * x * &twin });
                }
            }
        }
        _ => unreachable!("out-degree above 2"),
    }
    res.retain(|c| !c.factor.is_zero());
    res
}

/// Weighted double cycle covers by exhaustive search over the out-multisets of
/// every vertex: each arc is used 0, 1 or 2 times and every vertex has in- and
/// out-degree 2 (terminals follow [`Terminals`]).
pub fn count_double_cycle_covers(g: &WeightedDigraph, terminals: Option<Terminals>, weight: CoverWeight) -> Result<BigRational> {
    if g.n > DOUBLE_COVER_GUARD {
        return Err(Error::limit(format!("double cover count on {} vertices exceeds the guard {DOUBLE_COVER_GUARD}", g.n)));
    }
    let (outd, ind) = degree_targets(g.n, terminals)?;
    let choices: Vec<_> = g.out_arcs().iter().enumerate().map(|(u, a)| out_multisets(a, outd[u], weight)).collect();
    fn rec(choices: &[Vec<OutChoice<BigRational>>], ind: &[u8], u: usize, got: &mut [u8], acc: &BigRational, total: &mut BigRational) {
        if u == choices.len() {
            if got == ind {
                *total += acc;
            }
            return;
        }
        'next: for c in &choices[u] {
            for &(v, m) in &c.targets {
                if got[v] + m > ind[v] {
                    continue 'next;
                }
            }
            for &(v, m) in &c.targets {
                got[v] += m;
            }
            rec(choices, ind, u + 1, got, &(acc * &c.factor), total);
            for &(v, m) in &c.targets {
                got[v] -= m;
            }
        }
    }
    let mut total = BigRational::zero();
    rec(&choices, &ind, 0, &mut vec![0; g.n], &BigRational::one(), &mut total);
    Ok(total)
}

/// Same quantity as [`count_double_cycle_covers`] by a frontier dynamic
/// program over the vertex order. Memory grows with the number of vertices
/// that have received part of their in-degree but still have unprocessed
/// in-neighbours, so graphs laid out along chains stay cheap.
pub fn double_cover_dp(g: &WeightedDigraph, terminals: Option<Terminals>, weight: CoverWeight) -> Result<BigRational> {
    let (outd, ind) = degree_targets(g.n, terminals)?;
    let out = g.out_arcs();
    let mut last_in: Vec<Option<usize>> = vec![None; g.n];
    for e in &g.edges {
        last_in[e.to] = Some(last_in[e.to].map_or(e.from, |x| x.max(e.from)));
    }
    let mut closes_at: Vec<Vec<usize>> = vec![Vec::new(); g.n];
    for v in 0..g.n {
        match last_in[v] {
            Some(u) => closes_at[u].push(v),
            None if ind[v] > 0 => return Ok(BigRational::zero()),
            None => {}
        }
    }
    // State: sorted (vertex, in-degree received) for open vertices with a
    // nonzero count.
    let mut states: BTreeMap<Vec<(usize, u8)>, BigRational> = BTreeMap::new();
    states.insert(Vec::new(), BigRational::one());
    for u in 0..g.n {
        let choices = out_multisets(&out[u], outd[u], weight);
        let mut next: BTreeMap<Vec<(usize, u8)>, BigRational> = BTreeMap::new();
        for (key, val) in &states {
            'choice: for c in &choices {
                let mut k = key.clone();
                for &(v, m) in &c.targets {
                    match k.binary_search_by_key(&v, |p| p.0) {
                        Ok(i) => {
                            k[i].1 += m;
                            if k[i].1 > ind[v] {
                                continue 'choice;
                            }
                        }
                        Err(i) => {
                            if m > ind[v] {
                                continue 'choice;
                            }
                            k.insert(i, (v, m));
                        }
                    }
                }
                for &v in &closes_at[u] {
                    let got = k.binary_search_by_key(&v, |p| p.0).map(|i| k[i].1).unwrap_or(0);
                    if got != ind[v] {
                        continue 'choice;
                    }
                }
                k.retain(|p| !closes_at[u].contains(&p.0));
                *next.entry(k).or_insert_with(BigRational::zero) += val * &c.factor;
            }
        }
        next.retain(|_, v| !v.is_zero());
        if next.len() > FRONTIER_STATE_GUARD {
            return Err(Error::limit(format!("frontier grew past {FRONTIER_STATE_GUARD} states")));
        }
        states = next;
    }
    Ok(states.remove(&Vec::new()).unwrap_or_else(BigRational::zero))
}

/// `D(G)`: every vertex `x` becomes twins `2x` and `2x+1`, and every arc
/// `u→v` becomes the four arcs between their twins with the same weight.
pub fn double_graph(g: &WeightedDigraph) -> WeightedDigraph {
    let mut edges = Vec::with_capacity(4 * g.edges.len());
    for e in &g.edges {
        for a in 0..2 {
            for b in 0..2 {
                edges.push(Edge { from: 2 * e.from + a, to: 2 * e.to + b, weight: e.weight.clone() });
            }
        }
    }
    WeightedDigraph { n: 2 * g.n, edges }
}

/// Undirected bipartite graph given by its biadjacency matrix: left vertex
/// `i` joins right vertex `j` with weight `B[i][j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteGraph {
    biadjacency: SquareMatrix<BigRational>,
}

/// Largest side accepted by [`BipartiteGraph::perfect_matchings`].
pub const MATCHING_GUARD: usize = 9;

impl BipartiteGraph {
    pub fn side(&self) -> usize {
        self.biadjacency.size()
    }

    pub fn biadjacency(&self) -> &SquareMatrix<BigRational> {
        &self.biadjacency
    }

    /// Symmetric `2m × 2m` adjacency `[[0, B], [Bᵀ, 0]]`, left side first.
    pub fn adjacency(&self) -> SquareMatrix<BigRational> {
        let m = self.side();
        SquareMatrix::from_fn(2 * m, |i, j| match (i < m, j < m) {
            (true, false) => self.biadjacency.get(i, j - m).clone(),
            (false, true) => self.biadjacency.get(j, i - m).clone(),
            _ => BigRational::zero(),
        })
    }

    /// Weighted perfect matchings by searching edge sets directly.
    pub fn perfect_matchings(&self) -> Result<BigRational> {
        let m = self.side();
        if m > MATCHING_GUARD {
            return Err(Error::limit(format!("matching enumeration on side {m} exceeds the guard {MATCHING_GUARD}")));
        }
        let edges: Vec<(usize, usize, BigRational)> = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let w = self.biadjacency.get(i, j);
                (!w.is_zero()).then(|| (i, j, w.clone()))
            })
            .collect();
        // Choose a subset of edges covering every vertex exactly once, by
        // scanning edges in order and deciding take/skip.
        fn rec(edges: &[(usize, usize, BigRational)], k: usize, left: u32, right: u32, m: usize, acc: &BigRational, total: &mut BigRational) {
            if left.count_ones() as usize == m {
                if right.count_ones() as usize == m {
                    *total += acc;
                }
                return;
            }
            if k == edges.len() {
                return;
            }
            let (i, j, w) = &edges[k];
            if left & (1 << i) == 0 && right & (1 << j) == 0 {
                rec(edges, k + 1, left | (1 << i), right | (1 << j), m, &(acc * w), total);
            }
            rec(edges, k + 1, left, right, m, acc, total);
        }
        let mut total = BigRational::zero();
        rec(&edges, 0, 0, 0, m, &BigRational::one(), &mut total);
        Ok(total)
    }
}

/// Bipartite graph whose biadjacency matrix is `a`. When `a` is the
/// adjacency of a double graph, twins stay adjacent on each side, so the
/// lift's adjacency is again row/column doubled.
pub fn bipartite_lift(a: &SquareMatrix<BigRational>) -> BipartiteGraph {
    BipartiteGraph { biadjacency: a.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat_int;
    use crate::matchperm::permanent;

    #[test]
    fn small_cover_counts() {
        let two_cycle = WeightedDigraph::unit(2, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(count_cycle_covers(&two_cycle).unwrap(), rat_int(1));
        let arcs: Vec<_> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).collect();
        let k3 = WeightedDigraph::unit(3, &arcs).unwrap();
        assert_eq!(count_cycle_covers(&k3).unwrap(), rat_int(6));
        assert_eq!(permanent(&k3.adjacency()).unwrap(), rat_int(6));
    }

    #[test]
    fn loop_is_used_twice() {
        let g = WeightedDigraph::unit(1, &[(0, 0)]).unwrap();
        assert_eq!(count_double_cycle_covers(&g, None, CoverWeight::Plain).unwrap(), rat_int(1));
        assert_eq!(double_cover_dp(&g, None, CoverWeight::Plain).unwrap(), rat_int(1));
    }

    #[test]
    fn frontier_matches_brute_force() {
        let arcs: Vec<_> = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).filter(|&(i, j)| (i + 2 * j) % 3 != 1).collect();
        let mut g = WeightedDigraph::unit(4, &arcs).unwrap();
        for (k, e) in g.edges.iter_mut().enumerate() {
            e.weight = rat_int(1 + (k as i64 % 3));
        }
        for w in [CoverWeight::Plain, CoverWeight::Twin] {
            assert_eq!(count_double_cycle_covers(&g, None, w).unwrap(), double_cover_dp(&g, None, w).unwrap());
        }
    }

    #[test]
    fn double_graph_quadruples_arcs() {
        let g = WeightedDigraph::unit(1, &[(0, 0)]).unwrap();
        let d = double_graph(&g);
        assert_eq!((d.n(), d.edges().len()), (2, 4));
    }

    #[test]
    fn identity_lift_has_one_matching() {
        let lift = bipartite_lift(&SquareMatrix::identity(4));
        assert_eq!(lift.perfect_matchings().unwrap(), rat_int(1));
    }
}
