//! The pairing functional of `I[2] + α·A_bip` as an integer polynomial in `α`.
//!
//! A pairing of the lifted matrix picks, for every twin block, either the
//! block's own pair (weight 1) or two cross pairs to blocks on the other side
//! (weight `α·w` each). Grouping pairings by the multiplicity `m_e ∈ {0,1,2}`
//! they put on each arc `e = x→y` of the graph gives
//!
//! `P(α) = Σ_m Π_e (α w_e)^{m_e} · Π_{x out-active} c(x) · Π_{y in-active} 2`
//!
//! where every vertex has out- and in-degree 0 or 2, and `c(x)` is 2 when the
//! two out-arcs of `x` differ and 1 when one arc is doubled. The top
//! coefficient is the permanent of the double graph's adjacency.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::digraph::WeightedDigraph;
use super::gadget::Gadget;
use crate::error::{Error, Result};

/// Dense polynomial, lowest degree first.
pub type Poly = Vec<BigInt>;

fn trim(mut p: Poly) -> Poly {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

fn poly_add_into(dst: &mut Poly, src: &[BigInt], scale: &BigInt, shift: usize) {
    if src.is_empty() || scale.is_zero() {
        return;
    }
    if dst.len() < src.len() + shift {
        dst.resize(src.len() + shift, BigInt::zero());
    }
    for (k, c) in src.iter().enumerate() {
        if !c.is_zero() {
            dst[k + shift] += c * scale;
        }
    }
}

pub(crate) fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    trim(out)
}

fn monomial(c: BigInt, k: usize) -> Poly {
    let mut p = vec![BigInt::zero(); k + 1];
    p[k] = c;
    trim(p)
}

fn integer_weights(g: &WeightedDigraph) -> Result<Vec<Vec<(usize, BigInt)>>> {
    g.out_arcs()
        .into_iter()
        .map(|arcs| {
            arcs.into_iter()
                .map(|(v, w)| {
                    if w.is_integer() {
                        Ok((v, w.to_integer()))
                    } else {
                        Err(Error::invalid("pairing polynomial needs integer arc weights"))
                    }
                })
                .collect()
        })
        .collect()
}

/// Out-choices of total size 0 or 2 with their factor `c(x)·Π w^m`.
fn active_out_choices(arcs: &[(usize, BigInt)]) -> Vec<(Vec<(usize, u8)>, BigInt)> {
    let mut res = vec![(vec![], BigInt::one())];
    for (i, (v, w)) in arcs.iter().enumerate() {
        res.push((vec![(*v, 2)], w * w));
        for (u, x) in &arcs[i + 1..] {
            res.push((vec![(*v, 1), (*u, 1)], w * x * 2));
        }
    }
    res.retain(|c| !c.1.is_zero());
    res
}

/// `P(α)` for any graph by a frontier dynamic program over the vertex order.
/// Used to cross-check the chain-structured evaluator.
pub fn pairing_polynomial(g: &WeightedDigraph) -> Result<Poly> {
    let out = integer_weights(g)?;
    let n = g.n();
    let mut last_in: Vec<Option<usize>> = vec![None; n];
    for e in g.edges() {
        last_in[e.to] = Some(last_in[e.to].map_or(e.from, |x| x.max(e.from)));
    }
    let mut closes_at: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, l) in last_in.iter().enumerate() {
        if let Some(u) = l {
            closes_at[*u].push(v);
        }
    }
    let mut states: BTreeMap<Vec<(usize, u8)>, Poly> = BTreeMap::new();
    states.insert(Vec::new(), vec![BigInt::one()]);
    for u in 0..n {
        let choices = active_out_choices(&out[u]);
        let mut next: BTreeMap<Vec<(usize, u8)>, Poly> = BTreeMap::new();
        for (key, val) in &states {
            'choice: for (targets, factor) in &choices {
                let mut k = key.clone();
                let mut deg = 0usize;
                for &(v, m) in targets {
                    deg += m as usize;
                    match k.binary_search_by_key(&v, |p| p.0) {
                        Ok(i) => {
                            k[i].1 += m;
                            if k[i].1 > 2 {
                                continue 'choice;
                            }
                        }
                        Err(i) => k.insert(i, (v, m)),
                    }
                }
                let mut scale = factor.clone();
                for &v in &closes_at[u] {
                    match k.binary_search_by_key(&v, |p| p.0).map(|i| k[i].1).unwrap_or(0) {
                        0 => {}
                        2 => scale *= 2,
                        _ => continue 'choice,
                    }
                }
                k.retain(|p| !closes_at[u].contains(&p.0));
                poly_add_into(next.entry(k).or_default(), val, &scale, deg);
            }
        }
        states = next;
    }
    Ok(trim(states.remove(&Vec::new()).unwrap_or_default()))
}

type Mat3 = [[Poly; 3]; 3];
/// Arc targets with multiplicities.
type Targets = Vec<(usize, u8)>;

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut acc = Vec::new();
            for k in 0..3 {
                let p = poly_mul(&a[i][k], &b[k][j]);
                poly_add_into(&mut acc, &p, &BigInt::one(), 0);
            }
            trim(acc)
        })
    })
}

/// `L[a][x]`: one gadget link with `a` arcs leaving the entry and `x` arcs
/// reaching the exit. Includes the entry's out-factor when `a > 0` and every
/// interior vertex's factors, but not the exit's in-factor.
fn link_matrix(gadget: &Gadget) -> Result<Mat3> {
    let out = integer_weights(&gadget.graph)?;
    let (s, t) = (gadget.s, gadget.t);
    let interior: Vec<usize> = (0..gadget.graph.n()).filter(|&v| v != s && v != t).collect();
    let mut entry: Vec<(usize, Targets, BigInt)> = vec![(0, vec![], BigInt::one())];
    for (i, (v, w)) in out[s].iter().enumerate() {
        // A single arc into the gadget pairs with an out-arc elsewhere, so
        // the entry's two out-arcs differ.
        entry.push((1, vec![(*v, 1)], w * 2));
        entry.push((2, vec![(*v, 2)], w * w));
        for (u, x) in &out[s][i + 1..] {
            entry.push((2, vec![(*v, 1), (*u, 1)], w * x * 2));
        }
    }
    let mut l: Mat3 = Default::default();
    let per_vertex: Vec<_> = interior.iter().map(|&v| active_out_choices(&out[v])).collect();
    fn rec(
        per_vertex: &[Vec<(Targets, BigInt)>],
        k: usize,
        ind: &mut Vec<u8>,
        deg: usize,
        acc: &BigInt,
        sink: &mut dyn FnMut(&[u8], usize, &BigInt),
    ) {
        if k == per_vertex.len() {
            sink(ind, deg, acc);
            return;
        }
        for (targets, f) in &per_vertex[k] {
            let mut d = 0;
            for &(v, m) in targets {
                ind[v] += m;
                d += m as usize;
            }
            rec(per_vertex, k + 1, ind, deg + d, &(acc * f), sink);
            for &(v, m) in targets {
                ind[v] -= m;
            }
        }
    }
    for (a, targets, f) in &entry {
        let mut ind = vec![0u8; gadget.graph.n()];
        let mut d0 = 0;
        for &(v, m) in targets {
            ind[v] += m;
            d0 += m as usize;
        }
        let mut sink = |ind: &[u8], deg: usize, acc: &BigInt| {
            if ind[s] != 0 || ind[t] > 2 {
                return;
            }
            let mut scale = acc.clone();
            for &v in &interior {
                match ind[v] {
                    0 => {}
                    2 => scale *= 2,
                    _ => return,
                }
            }
            let x = ind[t] as usize;
            poly_add_into(&mut l[*a][x], &monomial(BigInt::one(), deg), &scale, 0);
        };
        rec(&per_vertex, 0, &mut ind, d0, f, &mut sink);
    }
    Ok(l.map(|row| row.map(trim)))
}

/// `J[x][y]`: a join vertex receiving `x` arcs from the previous link and
/// sending `y` into the next, with its self-loop used `m` times so that both
/// degrees are 0 or 2.
#[allow(clippy::needless_range_loop)]
fn join_matrix() -> Mat3 {
    let mut j: Mat3 = Default::default();
    for x in 0..3usize {
        for y in 0..3usize {
            for m in 0..3usize {
                let (o, i) = (y + m, x + m);
                if (o == 0 || o == 2) && (i == 0 || i == 2) {
                    let f = if i == 2 { 2 } else { 1 };
                    poly_add_into(&mut j[x][y], &monomial(BigInt::from(f), m), &BigInt::one(), 0);
                }
            }
        }
    }
    j
}

/// Chain transfer `T[a][b]` for `links` gadget copies between an attachment
/// vertex's `a` outgoing and `b` incoming chain arcs.
pub(crate) fn chain_transfer(gadget: &Gadget, links: usize) -> Result<Mat3> {
    if links == 0 {
        let mut t: Mat3 = Default::default();
        t[0][0] = vec![BigInt::one()];
        return Ok(t);
    }
    let l = link_matrix(gadget)?;
    let lj = mat_mul(&l, &join_matrix());
    let mut t = l;
    for _ in 1..links {
        t = mat_mul(&lj, &t);
    }
    Ok(t)
}

/// `F[r][c]`: everything an attachment vertex and its chain contribute when
/// the original graph's arcs use `r` of its out-degree and `c` of its
/// in-degree.
#[allow(clippy::needless_range_loop)]
fn vertex_matrix(t: &Mat3) -> Mat3 {
    let mut f: Mat3 = Default::default();
    for r in 0..3 {
        for c in 0..3 {
            for a in 0..3 {
                if r + a != 0 && r + a != 2 {
                    continue;
                }
                for b in 0..3 {
                    if c + b != 0 && c + b != 2 {
                        continue;
                    }
                    let scale = BigInt::from(if c + b == 2 { 2 } else { 1 });
                    poly_add_into(&mut f[r][c], &t[a][b], &scale, 0);
                }
            }
            f[r][c] = trim(std::mem::take(&mut f[r][c]));
        }
    }
    f
}

/// Evaluates `P(α)` for graphs with identical chains attached at every vertex,
/// reusing chain products across graphs with the same gadget and length.
pub struct ChainEvaluator {
    vertex: Mat3,
    products: HashMap<Vec<u8>, Poly>,
}

impl ChainEvaluator {
    pub fn new(gadget: &Gadget, links: usize) -> Result<Self> {
        let t = chain_transfer(gadget, links)?;
        Ok(Self { vertex: vertex_matrix(&t), products: HashMap::new() })
    }

    fn product(&mut self, key: &[u8]) -> Poly {
        if let Some(p) = self.products.get(key) {
            return p.clone();
        }
        let p = match key.split_last() {
            None => vec![BigInt::one()],
            Some((&last, rest)) => {
                let head = self.product(rest);
                poly_mul(&head, &self.vertex[(last / 3) as usize][(last % 3) as usize])
            }
        };
        self.products.insert(key.to_vec(), p.clone());
        p
    }

    /// `P(α)` of `I[2] + α·A_bip` for the lift of `g` with chains attached.
    pub fn evaluate(&mut self, g: &WeightedDigraph) -> Result<Poly> {
        let out = integer_weights(g)?;
        let n = g.n();
        // Original arcs: out-multisets of size 0, 1 or 2 per vertex. Size-2
        // choices carry c(x); a size-1 choice is completed by a chain arc.
        let mut states: HashMap<(Vec<u8>, Vec<u8>), BigInt> = HashMap::new();
        states.insert((vec![], vec![0; n]), BigInt::one());
        for arcs in out.iter() {
            let mut choices = active_out_choices(arcs);
            for (v, w) in arcs {
                if !w.is_zero() {
                    choices.push((vec![(*v, 1)], w.clone()));
                }
            }
            let mut next: HashMap<(Vec<u8>, Vec<u8>), BigInt> = HashMap::new();
            for ((rs, cs), val) in &states {
                'choice: for (targets, f) in &choices {
                    let mut cs = cs.clone();
                    let mut r = 0u8;
                    for &(v, m) in targets {
                        cs[v] += m;
                        r += m;
                        if cs[v] > 2 {
                            continue 'choice;
                        }
                    }
                    let mut rs = rs.clone();
                    rs.push(r);
                    *next.entry((rs, cs)).or_insert_with(BigInt::zero) += val * f;
                }
            }
            states = next;
        }
        let mut total = Vec::new();
        let mut entries: Vec<_> = states.into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        for ((rs, cs), h) in entries {
            let shift: usize = rs.iter().map(|&r| r as usize).sum();
            let mut key: Vec<u8> = rs.iter().zip(&cs).map(|(r, c)| r * 3 + c).collect();
            key.sort_unstable();
            let p = self.product(&key);
            poly_add_into(&mut total, &p, &h, shift);
        }
        Ok(trim(total))
    }
}

/// Leading coefficient of a degree-`degree` polynomial from its values at the
/// equispaced nodes `α_j = h·j`, `j = 1..=degree+1`, `h = num/den`:
/// `Σ_j (−1)^{D+1−j} C(D, j−1) f_j / (D! h^D)`.
pub fn leading_from_equispaced(values: &[BigRational], h: &BigRational) -> Result<BigRational> {
    if values.is_empty() {
        return Err(Error::invalid("interpolation needs at least one value"));
    }
    let d = values.len() - 1;
    let mut binom = BigInt::one();
    let mut acc = BigRational::zero();
    for (idx, f) in values.iter().enumerate() {
        // idx = j − 1; sign (−1)^{D − idx}
        let term = f * BigRational::from_integer(binom.clone());
        if (d - idx).is_multiple_of(2) {
            acc += term;
        } else {
            acc -= term;
        }
        binom = binom * BigInt::from(d - idx) / BigInt::from(idx + 1);
    }
    let fact: BigInt = (1..=d).fold(BigInt::one(), |a, k| a * BigInt::from(k));
    Ok(acc / (BigRational::from_integer(fact) * num_traits::pow(h.clone(), d)))
}

/// Integer values `den^D · P(num·j/den)` for `j = 1..=D+1`, by homogeneous
/// Horner evaluation, and the matching leading-coefficient recovery. Avoids
/// rational normalisation on the large plans.
pub fn scaled_node_values(p: &Poly, degree: usize, num: &BigInt, den: &BigInt) -> Vec<BigInt> {
    use rayon::prelude::*;
    let coeff = |k: usize| p.get(k).cloned().unwrap_or_else(BigInt::zero);
    // q_k = p_k · den^{D−k}
    let mut q = vec![BigInt::zero(); degree + 1];
    let mut dp = BigInt::one();
    for k in (0..=degree).rev() {
        q[k] = coeff(k) * &dp;
        dp *= den;
    }
    (1..=degree + 1)
        .into_par_iter()
        .map(|j| {
            let x = num * BigInt::from(j);
            let mut acc = q[degree].clone();
            for k in (0..degree).rev() {
                acc = acc * &x + &q[k];
            }
            acc
        })
        .collect()
}

/// Inverse of [`scaled_node_values`]: the leading coefficient from the scaled
/// values, exactly.
pub fn leading_from_scaled(values: &[BigInt], num: &BigInt) -> Result<BigRational> {
    if values.is_empty() {
        return Err(Error::invalid("interpolation needs at least one value"));
    }
    let d = values.len() - 1;
    let mut binom = BigInt::one();
    let mut acc = BigInt::zero();
    for (idx, f) in values.iter().enumerate() {
        if (d - idx).is_multiple_of(2) {
            acc += f * &binom;
        } else {
            acc -= f * &binom;
        }
        binom = binom * BigInt::from(d - idx) / BigInt::from(idx + 1);
    }
    let fact: BigInt = (1..=d).fold(BigInt::one(), |a, k| a * BigInt::from(k));
    let den = fact * num.pow(d as u32);
    let (q, r) = acc.div_rem(&den);
    if r.is_zero() {
        Ok(BigRational::from_integer(q))
    } else {
        Ok(BigRational::new(acc, den))
    }
}
