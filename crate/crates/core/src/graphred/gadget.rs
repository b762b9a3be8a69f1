use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::digraph::{count_double_cycle_covers, CoverWeight, Terminals, WeightedDigraph};
use crate::error::{Error, Result};

/// Double-cover counts of a two-terminal gadget at net flow 0, 1 and 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowProfile {
    pub counts: [u64; 3],
}

/// The profile every amplification gadget must have.
pub const TARGET_PROFILE: FlowProfile = FlowProfile { counts: [3, 4, 3] };

const INTERIOR: usize = 3;
const S: usize = 0;
const T: usize = 1;

/// Candidate arcs in canonical bit order: `s→i`, then `i→t`, then `i→j`
/// (loops included), interior vertices numbered from 2.
fn candidate_arcs() -> Vec<(usize, usize)> {
    let mut arcs = Vec::with_capacity(15);
    arcs.extend((0..INTERIOR).map(|i| (S, 2 + i)));
    arcs.extend((0..INTERIOR).map(|i| (2 + i, T)));
    for i in 0..INTERIOR {
        arcs.extend((0..INTERIOR).map(|j| (2 + i, 2 + j)));
    }
    arcs
}

/// Two-terminal gadget: vertex 0 is the entry `s`, vertex 1 the exit `t`,
/// vertices 2..5 are interior.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gadget {
    pub graph: WeightedDigraph,
    pub s: usize,
    pub t: usize,
    /// Index in the canonical enumeration.
    pub mask: u32,
    pub profile: FlowProfile,
    /// Profile where each interior vertex with two distinct out-arcs counts
    /// twice and the entry counts as a vertex whose other out-arc lies
    /// outside the gadget: factor 2 at flow 1, factor 2 at flow 2 when its
    /// two arcs differ, 1 at flow 0. One chain link contributes exactly
    /// this to the double graph's cycle covers, divided by `2^{vertices}`.
    pub twin_profile: FlowProfile,
}

impl Gadget {
    pub fn interior_size(&self) -> usize {
        INTERIOR
    }

    /// `max(W₀, W₂) / W₁` for the twin-weighted profile.
    pub fn twin_ratio(&self) -> f64 {
        let [w0, w1, w2] = self.twin_profile.counts;
        w0.max(w2) as f64 / w1 as f64
    }

    pub fn amplifies_twin(&self) -> bool {
        let [w0, w1, w2] = self.twin_profile.counts;
        w1 > w0.max(w2)
    }
}

fn fast_profiles(mask: u32, arcs: &[(usize, usize)]) -> (FlowProfile, FlowProfile) {
    let mut out: [Vec<usize>; 5] = Default::default();
    for (b, &(u, v)) in arcs.iter().enumerate() {
        if mask & (1 << b) != 0 {
            out[u].push(v);
        }
    }
    // Out-multisets of size 2 as (targets, twin factor).
    let pairs = |ts: &[usize]| -> Vec<([usize; 2], u64)> {
        let mut r = Vec::new();
        for (i, &a) in ts.iter().enumerate() {
            r.push(([a, a], 1));
            for &b in &ts[i + 1..] {
                r.push(([a, b], 2));
            }
        }
        r
    };
    let inner: Vec<_> = (2..5).map(|u| pairs(&out[u])).collect();
    let mut plain = [0u64; 3];
    let mut twin = [0u64; 3];
    for f in 0..3u8 {
        let entry: Vec<(Vec<usize>, u64)> = match f {
            0 => vec![(vec![], 1)],
            1 => out[S].iter().map(|&v| (vec![v], 2)).collect(),
            _ => pairs(&out[S]).into_iter().map(|(p, w)| (p.to_vec(), w)).collect(),
        };
        for (e, we) in &entry {
            for (a, wa) in &inner[0] {
                for (b, wb) in &inner[1] {
                    for (c, wc) in &inner[2] {
                        let mut ind = [0u8; 5];
                        for &v in e.iter().chain(a).chain(b).chain(c) {
                            ind[v] += 1;
                        }
                        if ind == [0, f, 2, 2, 2] {
                            plain[f as usize] += 1;
                            twin[f as usize] += we * wa * wb * wc;
                        }
                    }
                }
            }
        }
    }
    (FlowProfile { counts: plain }, FlowProfile { counts: twin })
}

fn gadget_from_mask(mask: u32) -> Result<Gadget> {
    let arcs = candidate_arcs();
    let chosen: Vec<_> = arcs.iter().enumerate().filter(|(b, _)| mask & (1 << b) != 0).map(|(_, a)| *a).collect();
    let graph = WeightedDigraph::unit(2 + INTERIOR, &chosen)?;
    let (profile, twin_profile) = fast_profiles(mask, &arcs);
    Ok(Gadget { graph, s: S, t: T, mask, profile, twin_profile })
}

/// Gadget profile recounted with the generic double-cover counter.
pub fn gadget_profile(g: &Gadget) -> Result<FlowProfile> {
    let mut counts = [0u64; 3];
    for (f, c) in counts.iter_mut().enumerate() {
        let t = Terminals { s: g.s, t: g.t, flow: f as u8 };
        let v = count_double_cycle_covers(&g.graph, Some(t), CoverWeight::Plain)?;
        *c = v.to_integer().to_u64().ok_or_else(|| Error::invalid("gadget count is not a small integer"))?;
    }
    Ok(FlowProfile { counts })
}

fn search(max_vertices: usize, accept: impl Fn(&Gadget) -> bool) -> Result<Gadget> {
    if max_vertices < 2 + INTERIOR {
        return Err(Error::invalid(format!("a gadget needs {} vertices, got a bound of {max_vertices}", 2 + INTERIOR)));
    }
    let arcs = candidate_arcs();
    for mask in 0..(1u32 << arcs.len()) {
        let (p, _) = fast_profiles(mask, &arcs);
        if p == TARGET_PROFILE {
            let g = gadget_from_mask(mask)?;
            if accept(&g) {
                return Ok(g);
            }
        }
    }
    Err(Error::NotFound("no gadget with flow profile (3, 4, 3)".into()))
}

/// First gadget in canonical order with flow profile (3, 4, 3).
pub fn search_gadget(max_vertices: usize) -> Result<Gadget> {
    search(max_vertices, |_| true)
}

/// First (3, 4, 3) gadget whose twin-weighted profile also peaks at flow 1.
/// This is the gadget the compiler chains, since the pairing functional of
/// the lifted matrix sees twin-weighted covers.
pub fn search_twin_gadget(max_vertices: usize) -> Result<Gadget> {
    search(max_vertices, Gadget::amplifies_twin)
}

/// All (3, 4, 3) gadgets in canonical order.
pub fn all_target_gadgets() -> Vec<Gadget> {
    let arcs = candidate_arcs();
    (0..(1u32 << arcs.len()))
        .filter(|&m| fast_profiles(m, &arcs).0 == TARGET_PROFILE)
        .filter_map(|m| gadget_from_mask(m).ok())
        .collect()
}

/// `⌈1 + log_{4/3}(271 + n^{2n})⌉`, evaluated exactly: the smallest integer
/// `ℓ` with `(4/3)^{ℓ−1} ≥ 271 + n^{2n}`.
pub fn chain_length(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::invalid("chain length needs n ≥ 1"));
    }
    let target = BigUint::from(271u32) + BigUint::from(n).pow(2 * n as u32);
    // (4/3)^k ≥ target  ⇔  4^k ≥ target · 3^k
    let mut k = 0u32;
    while BigUint::from(4u32).pow(k) < &target * BigUint::from(3u32).pow(k) {
        k += 1;
    }
    Ok(k as usize + 1)
}

/// Smallest `ℓ` with `(3/4)^ℓ (271 + n^{2n}) < 1`.
pub fn desk_chain_length(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::invalid("chain length needs n ≥ 1"));
    }
    let target = BigUint::from(271u32) + BigUint::from(n).pow(2 * n as u32);
    let mut l = 0u32;
    while BigUint::from(3u32).pow(l) * &target >= BigUint::from(4u32).pow(l) {
        l += 1;
    }
    Ok(l as usize)
}

/// `(1 + n + n(n+1)/2)^n`: out-multisets of size at most 2 per vertex,
/// which bounds the flow patterns of an `n`-vertex graph.
pub fn flow_pattern_bound(n: usize) -> BigUint {
    BigUint::from(1 + n + n * (n + 1) / 2).pow(n as u32)
}

/// Smallest `ℓ` with `patterns · 2^n · w^{2n} · (max(W₀, W₂)/W₁)^ℓ < 1`,
/// the error bound for recovering a count from twin-weighted chains.
pub fn twin_chain_length(n: usize, gadget: &Gadget, max_weight: &BigInt) -> Result<usize> {
    if !gadget.amplifies_twin() {
        return Err(Error::invalid("gadget does not amplify flow 1 under twin weighting"));
    }
    let [w0, w1, w2] = gadget.twin_profile.counts;
    let worst = BigUint::from(w0.max(w2));
    let w1 = BigUint::from(w1);
    let w = max_weight.magnitude().clone().max(BigUint::one());
    let lead = flow_pattern_bound(n) * BigUint::from(2u32).pow(n as u32) * w.pow(2 * n as u32);
    let mut l = 0u32;
    while &lead * worst.clone().pow(l) >= w1.clone().pow(l) {
        l += 1;
    }
    Ok(l as usize)
}

/// Vertex layout of a graph with chains attached.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLayout {
    pub original: usize,
    pub links: usize,
    /// `interior[v][k]` lists the interior vertices of link `k` on vertex
    /// `v`'s chain.
    pub interior: Vec<Vec<Vec<usize>>>,
    /// `joins[v][k]` joins link `k` to link `k + 1`.
    pub joins: Vec<Vec<usize>>,
}

/// Attaches an `ℓ`-link chain of gadget copies at every vertex `v`, with the
/// first entry and last exit identified with `v`. Consecutive links meet at a
/// join vertex carrying a weight-1 self-loop, which absorbs the flow the
/// links do not carry. The original vertices keep their indices; each chain
/// is laid out contiguously after them.
pub fn attach_chains(g: &WeightedDigraph, gadget: &Gadget, links: usize) -> Result<(WeightedDigraph, ChainLayout)> {
    if gadget.profile != TARGET_PROFILE {
        return Err(Error::invalid("gadget profile must be (3, 4, 3)"));
    }
    let n = g.n();
    let mut out = g.clone();
    let mut layout = ChainLayout { original: n, links, interior: vec![vec![]; n], joins: vec![vec![]; n] };
    if links == 0 {
        return Ok((out, layout));
    }
    let interior_only = WeightedDigraph::new(INTERIOR, vec![])?;
    for v in 0..n {
        let mut entry = v;
        for k in 0..links {
            let base = out.append(&interior_only);
            let ids: Vec<usize> = (0..INTERIOR).map(|i| base + i).collect();
            let exit = if k + 1 == links {
                v
            } else {
                let j = out.append(&WeightedDigraph::new(1, vec![])?);
                out.push_edge(j, j, BigRational::one());
                layout.joins[v].push(j);
                j
            };
            for e in gadget.graph.edges() {
                let map = |x: usize| match x {
                    S => entry,
                    T => exit,
                    i => ids[i - 2],
                };
                out.push_edge(map(e.from), map(e.to), e.weight.clone());
            }
            layout.interior[v].push(ids);
            entry = exit;
        }
    }
    Ok((out, layout))
}

/// `⌊N′ / 4^{links}⌋` in exact arithmetic; `links` counts every chain link in
/// the graph, so it is `ℓ · |V|` for a full attachment.
pub fn recover_count(nprime: &BigRational, links: usize) -> Result<BigInt> {
    recover_count_with(nprime, &BigInt::from(4), links)
}

/// `⌊N′ / factor^{links}⌋` in exact arithmetic.
pub fn recover_count_with(nprime: &BigRational, factor: &BigInt, links: usize) -> Result<BigInt> {
    if nprime < &BigRational::zero() {
        return Err(Error::invalid("recovered count needs N′ ≥ 0"));
    }
    let d = BigRational::from_integer(factor.pow(links as u32));
    Ok((nprime / d).floor().to_integer())
}
