use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::digraph::{
    bipartite_lift, count_cycle_covers, count_double_cycle_covers, double_cover_dp, double_graph, CoverWeight, Edge,
    WeightedDigraph,
};
use super::evaluate::{leading_from_equispaced, leading_from_scaled, scaled_node_values, ChainEvaluator};
use super::gadget::{
    attach_chains, chain_length, desk_chain_length, flow_pattern_bound, recover_count, search_gadget, twin_chain_length,
    ChainLayout, Gadget,
};
use crate::error::{Error, Result};
use crate::io::ser_rational;
use crate::matchperm::{pairing_sum, permanent, DoubledMatrix, Functional, SquareMatrix, SymmetricMatrix, PAIRING_GUARD, RYSER_GUARD};

/// Largest input graph accepted by [`compile_dcc_to_qbu`].
pub const DCC_GUARD: usize = 4;
/// Largest lifted matrix materialised by [`ReductionPlan::instance`].
pub const INSTANCE_GUARD: usize = 256;

const ALPHA_BITS: u32 = 16;

/// Chain lengths considered by the compiler.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ChainLengths {
    /// `⌈1 + log_{4/3}(271 + n^{2n})⌉`.
    pub formula: usize,
    /// Smallest `ℓ` with `(3/4)^ℓ (271 + n^{2n}) < 1`.
    pub desk: usize,
    /// Smallest `ℓ` certifying recovery from the twin-weighted count.
    pub twin: usize,
}

/// Vertex counts of each intermediate object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StageSizes {
    pub original: usize,
    pub chained: usize,
    pub doubled: usize,
    pub lifted: usize,
}

/// One step of turning interpolated values into the cycle-cover count.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum RecipeStep {
    /// Leading coefficient of the pairing functional from `degree + 1` nodes.
    Interpolate { degree: usize, nodes: usize },
    /// Divide by `2^{exponent}`, the twin multiplicity of the double graph.
    DivideTwinMultiplicity { exponent: usize },
    /// Divide by `base^{exponent}`, the flow-1 chain weight.
    DivideChainWeight { base: u64, exponent: usize },
    /// Round down; the discarded part is the non-unit-flow residual.
    Floor,
    /// Undo the integer scaling of rational weights.
    UnscaleWeights {
        #[serde(serialize_with = "ser_bigint")]
        scale: BigInt,
        exponent: usize,
    },
}

fn ser_bigint<S: serde::Serializer>(x: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

/// Everything needed to turn a cycle-cover count into pairing-functional
/// evaluations of doubled PSD matrices and back.
#[derive(Clone, Debug, Serialize)]
pub struct ReductionPlan {
    #[serde(skip)]
    pub original: WeightedDigraph,
    /// Common denominator of the original weights.
    #[serde(serialize_with = "ser_bigint")]
    pub weight_scale: BigInt,
    #[serde(skip)]
    pub scaled: WeightedDigraph,
    pub gadget_mask: u32,
    pub gadget_profile: [u64; 3],
    pub gadget_twin_profile: [u64; 3],
    #[serde(skip)]
    pub gadget: Gadget,
    pub links: usize,
    pub lengths: ChainLengths,
    /// Whether `links` meets the twin-weighted error bound.
    pub bound_certified: bool,
    #[serde(skip)]
    pub chained: WeightedDigraph,
    #[serde(skip)]
    pub layout: ChainLayout,
    pub sizes: StageSizes,
    pub functional: Functional,
    /// Degree of the functional in `α`: half the lifted size.
    pub degree: usize,
    /// `1/|λ_min(A − I[2])|` estimated numerically.
    pub alpha_max: f64,
    /// Certified `α ≤ alpha_max` from the norm bound `σ² ≤ ‖A‖₁‖A‖∞`.
    #[serde(serialize_with = "ser_rational")]
    pub alpha_cert: BigRational,
    /// Nodes are `α_j = node_step · j`, `j = 1..=degree+1`.
    #[serde(serialize_with = "ser_rational")]
    pub node_step: BigRational,
    pub recipe: Vec<RecipeStep>,
}

/// Overrides for [`compile_dcc_to_qbu_with`].
#[derive(Clone, Debug, Default)]
pub struct CompileOptions {
    pub links: Option<usize>,
    pub gadget: Option<Gadget>,
}

fn lcm_of_denominators(g: &WeightedDigraph) -> BigInt {
    g.edges().iter().fold(BigInt::one(), |acc, e| acc.lcm(e.weight.denom()))
}

/// Power iteration for the largest singular value of a nonnegative sparse
/// matrix.
fn sigma_max_estimate(g: &WeightedDigraph) -> f64 {
    let n = g.n();
    if n == 0 || g.edges().is_empty() {
        return 0.0;
    }
    let arcs: Vec<(usize, usize, f64)> = g.edges().iter().map(|e| (e.from, e.to, e.weight.to_f64().unwrap_or(0.0).abs())).collect();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let mut y = vec![0.0; n];
        for &(i, j, w) in &arcs {
            y[i] += w * x[j];
        }
        let mut z = vec![0.0; n];
        for &(i, j, w) in &arcs {
            z[j] += w * y[i];
        }
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = x.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        x = z.into_iter().map(|v| v / norm).collect();
        if (next - lambda).abs() <= 1e-14 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

/// Dyadic `α ≤ 1/(2σ_max(A))` certified by `σ_max² ≤ ‖A‖₁ ‖A‖∞`.
fn certified_alpha(g: &WeightedDigraph) -> BigRational {
    let n = g.n();
    let mut rows = vec![BigRational::zero(); n];
    let mut cols = vec![BigRational::zero(); n];
    for e in g.edges() {
        rows[e.from] += e.weight.abs();
        cols[e.to] += e.weight.abs();
    }
    let max = |v: Vec<BigRational>| v.into_iter().fold(BigRational::zero(), |a, b| if b > a { b } else { a });
    let b2 = max(rows) * max(cols);
    if b2.is_zero() {
        return BigRational::one();
    }
    // Need 4 α² B² ≤ 1.
    let ok = |a: &BigRational| a * a * BigRational::from_integer(4.into()) * &b2 <= BigRational::one();
    let mut bits = ALPHA_BITS;
    loop {
        let scale = BigInt::one() << bits;
        let guess = (1.0 / (2.0 * b2.to_f64().unwrap_or(f64::MAX).sqrt()) * 2f64.powi(bits as i32)).floor();
        let mut c = BigInt::from(guess.max(0.0) as u64);
        while c > BigInt::zero() && !ok(&BigRational::new(c.clone(), scale.clone())) {
            c -= 1;
        }
        if c > BigInt::zero() {
            return BigRational::new(c, scale);
        }
        bits += 16;
    }
}

pub fn compile_dcc_to_qbu(g: &WeightedDigraph) -> Result<ReductionPlan> {
    compile_dcc_to_qbu_with(g, &CompileOptions::default())
}

/// Attaches chains, doubles, lifts, and fixes the interpolation nodes and
/// recipe. The pairing functional of `I[2] + α·A_bip` has leading
/// coefficient `perm(A_{D(G′)})`, which is `2^{|V′|}` times the twin-weighted
/// double covers of `G′`; unit-flow covers carry `W₁^{ℓ·|V|}`.
pub fn compile_dcc_to_qbu_with(g: &WeightedDigraph, opts: &CompileOptions) -> Result<ReductionPlan> {
    let n = g.n();
    if n == 0 {
        return Err(Error::invalid("graph has no vertices"));
    }
    if n > DCC_GUARD {
        return Err(Error::limit(format!("compilation of {n} vertices exceeds the guard {DCC_GUARD}")));
    }
    if g.has_negative_weight() {
        return Err(Error::invalid("count recovery needs nonnegative weights"));
    }
    let scale = lcm_of_denominators(g);
    let scaled = WeightedDigraph::new(
        n,
        g.edges()
            .iter()
            .map(|e| Edge { from: e.from, to: e.to, weight: &e.weight * BigRational::from_integer(scale.clone()) })
            .collect(),
    )?;
    let gadget = match &opts.gadget {
        Some(x) => x.clone(),
        None => search_gadget(5)?,
    };
    let wmax = scaled.max_weight().to_integer();
    let lengths = ChainLengths {
        formula: chain_length(n)?,
        desk: desk_chain_length(n)?,
        twin: twin_chain_length(n, &gadget, &wmax)?,
    };
    let links = opts.links.unwrap_or(lengths.desk.max(lengths.twin));
    let (chained, layout) = attach_chains(&scaled, &gadget, links)?;
    let vp = chained.n();
    let sizes = StageSizes { original: n, chained: vp, doubled: 2 * vp, lifted: 4 * vp };
    let degree = sizes.lifted / 2;
    let sigma = sigma_max_estimate(&chained);
    let alpha_max = if sigma == 0.0 { 1.0 } else { 1.0 / (2.0 * sigma) };
    let alpha_cert = certified_alpha(&chained);
    let node_step = &alpha_cert / BigRational::from_integer(BigInt::from(degree + 1));
    let recipe = vec![
        RecipeStep::Interpolate { degree, nodes: degree + 1 },
        RecipeStep::DivideTwinMultiplicity { exponent: vp },
        RecipeStep::DivideChainWeight { base: gadget.twin_profile.counts[1], exponent: links * n },
        RecipeStep::Floor,
        RecipeStep::UnscaleWeights { scale: scale.clone(), exponent: n },
    ];
    Ok(ReductionPlan {
        original: g.clone(),
        weight_scale: scale,
        scaled,
        gadget_mask: gadget.mask,
        gadget_profile: gadget.profile.counts,
        gadget_twin_profile: gadget.twin_profile.counts,
        gadget,
        links,
        lengths,
        bound_certified: links >= lengths.twin,
        chained,
        layout,
        sizes,
        functional: Functional::Pairing,
        degree,
        alpha_max,
        alpha_cert,
        node_step,
        recipe,
    })
}

/// How the pairing functional is evaluated at the nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Evaluator {
    /// Exact `pairing_sum` of every materialised `A′(α_j)`.
    Dense,
    /// Chain-transfer polynomial evaluated exactly at every node.
    Structured,
}

/// Result of running a plan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanOutcome {
    pub evaluator: Evaluator,
    /// Interpolated leading coefficient, `perm(A_{D(G′)})`.
    #[serde(serialize_with = "ser_rational")]
    pub leading: BigRational,
    /// Leading coefficient over `2^{|V′|}`.
    #[serde(serialize_with = "ser_rational")]
    pub twin_weighted: BigRational,
    /// Twin-weighted count over `W₁^{ℓ·|V|}`.
    #[serde(serialize_with = "ser_rational")]
    pub chain_normalised: BigRational,
    /// Fractional part discarded by the floor.
    pub residual: f64,
    /// Cycle-cover count of the original graph.
    #[serde(serialize_with = "ser_rational")]
    pub count: BigRational,
}

impl ReductionPlan {
    /// `A_bip`: the bipartite lift of the double graph of `G′`.
    pub fn lifted_adjacency(&self) -> SquareMatrix<BigRational> {
        bipartite_lift(&double_graph(&self.chained).adjacency()).adjacency()
    }

    pub fn node(&self, j: usize) -> BigRational {
        &self.node_step * BigRational::from_integer(BigInt::from(j))
    }

    /// The QBU instance `A′(α_j) = I[2] + α_j·A_bip` for node `j ∈ 1..=D+1`.
    pub fn instance(&self, j: usize) -> Result<DoubledMatrix> {
        if j == 0 || j > self.degree + 1 {
            return Err(Error::invalid(format!("node index {j} outside 1..={}", self.degree + 1)));
        }
        if self.sizes.lifted > INSTANCE_GUARD {
            return Err(Error::limit(format!("lifted size {} exceeds the guard {INSTANCE_GUARD}", self.sizes.lifted)));
        }
        let a = self.node(j).to_f64().unwrap_or(0.0);
        let bip = self.lifted_adjacency();
        let m = SquareMatrix::from_fn(self.sizes.lifted, |r, c| {
            let i2 = if r / 2 == c / 2 { 1.0 } else { 0.0 };
            i2 + a * bip.get(r, c).to_f64().unwrap_or(0.0)
        });
        DoubledMatrix::new(SymmetricMatrix::new(m)?)
    }

    fn exact_instance(&self, bip: &SquareMatrix<BigRational>, j: usize) -> SquareMatrix<BigRational> {
        let a = self.node(j);
        SquareMatrix::from_fn(self.sizes.lifted, |r, c| {
            let i2 = if r / 2 == c / 2 { BigRational::one() } else { BigRational::zero() };
            i2 + &a * bip.get(r, c)
        })
    }

    /// Leading coefficient of the pairing functional through the chosen
    /// evaluator.
    pub fn interpolate(&self, evaluator: Evaluator, cache: Option<&mut ChainEvaluator>) -> Result<BigRational> {
        match evaluator {
            Evaluator::Dense => {
                if self.sizes.lifted > PAIRING_GUARD {
                    return Err(Error::limit(format!(
                        "dense evaluation of lifted size {} exceeds the pairing guard {PAIRING_GUARD}",
                        self.sizes.lifted
                    )));
                }
                let bip = self.lifted_adjacency();
                let values = (1..=self.degree + 1)
                    .map(|j| pairing_sum(&self.exact_instance(&bip, j)))
                    .collect::<Result<Vec<_>>>()?;
                leading_from_equispaced(&values, &self.node_step)
            }
            Evaluator::Structured => {
                let mut own;
                let ev = match cache {
                    Some(c) => c,
                    None => {
                        own = ChainEvaluator::new(&self.gadget, self.links)?;
                        &mut own
                    }
                };
                let p = ev.evaluate(&self.scaled)?;
                if p.len() > self.degree + 1 {
                    return Err(Error::invalid("pairing polynomial exceeds its degree bound"));
                }
                let (num, den) = (self.node_step.numer().clone(), self.node_step.denom().clone());
                let values = scaled_node_values(&p, self.degree, &num, &den);
                leading_from_scaled(&values, &num)
            }
        }
    }

    /// Runs the recipe on an already interpolated leading coefficient.
    pub fn finish(&self, evaluator: Evaluator, leading: BigRational) -> Result<PlanOutcome> {
        let twin_weighted = &leading / BigRational::from_integer(BigInt::one() << self.sizes.chained);
        let w1 = BigInt::from(self.gadget.twin_profile.counts[1]);
        let chain_normalised = &twin_weighted / BigRational::from_integer(w1.pow((self.links * self.sizes.original) as u32));
        if chain_normalised.is_negative() {
            return Err(Error::invalid("negative normalised count"));
        }
        let floor = chain_normalised.floor();
        let residual = (&chain_normalised - &floor).to_f64().unwrap_or(f64::NAN);
        let count = floor / BigRational::from_integer(self.weight_scale.pow(self.sizes.original as u32));
        Ok(PlanOutcome { evaluator, leading, twin_weighted, chain_normalised, residual, count })
    }

    pub fn execute(&self, evaluator: Evaluator) -> Result<PlanOutcome> {
        let lead = self.interpolate(evaluator, None)?;
        self.finish(evaluator, lead)
    }

    pub fn execute_with(&self, cache: &mut ChainEvaluator) -> Result<PlanOutcome> {
        let lead = self.interpolate(Evaluator::Structured, Some(cache))?;
        self.finish(Evaluator::Structured, lead)
    }
}

/// Cycle covers of `D(G)` against `2^|V|` times the double covers of `G`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublingCheck {
    pub vertices: usize,
    #[serde(serialize_with = "ser_rational")]
    pub double_graph_covers: BigRational,
    /// `2^|V| ·` plain double covers.
    #[serde(serialize_with = "ser_rational")]
    pub plain_prediction: BigRational,
    /// `2^|V| ·` twin-weighted double covers.
    #[serde(serialize_with = "ser_rational")]
    pub twin_prediction: BigRational,
    pub plain_holds: bool,
    pub twin_holds: bool,
}

pub fn doubling_identity(g: &WeightedDigraph) -> Result<DoublingCheck> {
    let d = double_graph(g);
    let lhs = count_cycle_covers(&d)?;
    let mult = BigRational::from_integer(BigInt::one() << g.n());
    let plain = count_double_cycle_covers(g, None, CoverWeight::Plain)? * &mult;
    let twin = count_double_cycle_covers(g, None, CoverWeight::Twin)? * &mult;
    Ok(DoublingCheck {
        vertices: g.n(),
        plain_holds: lhs == plain,
        twin_holds: lhs == twin,
        double_graph_covers: lhs,
        plain_prediction: plain,
        twin_prediction: twin,
    })
}

/// Recovery through plain double covers of `G′` and `⌊N′/4^{ℓ·|V|}⌋`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlainRecovery {
    #[serde(serialize_with = "ser_rational")]
    pub double_covers: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub count: BigRational,
    /// `N′/4^{ℓ·|V|} − N`, using the true count `N` of the scaled graph.
    pub residual: f64,
}

pub fn plain_recovery(plan: &ReductionPlan) -> Result<PlainRecovery> {
    let nprime = double_cover_dp(&plan.chained, None, CoverWeight::Plain)?;
    let links = plan.links * plan.sizes.original;
    let floor = recover_count(&nprime, links)?;
    let truth = count_cycle_covers(&plan.scaled)?;
    let ratio = &nprime / BigRational::from_integer(BigInt::from(4).pow(links as u32));
    let residual = (ratio - &truth).to_f64().unwrap_or(f64::NAN);
    let count = BigRational::from_integer(floor) / BigRational::from_integer(plan.weight_scale.pow(plan.sizes.original as u32));
    Ok(PlainRecovery { double_covers: nprime, count, residual })
}

/// `pairing_sum(A_bip)` and `perm(A_bip)` against `perm(M)` for
/// `M = A_{D(G′)}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SquareRelation {
    #[serde(serialize_with = "ser_rational")]
    pub base_permanent: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub lifted_pairing: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub lifted_permanent: BigRational,
    /// `perm(A_bip) / perm(M)²`, `None` when `perm(M) = 0`.
    pub square_ratio: Option<f64>,
    pub square_holds: bool,
    pub pairing_holds: bool,
}

pub fn square_relation(plan: &ReductionPlan) -> Result<SquareRelation> {
    if plan.sizes.lifted > RYSER_GUARD {
        return Err(Error::limit(format!("lifted size {} exceeds the permanent guard {RYSER_GUARD}", plan.sizes.lifted)));
    }
    let m = double_graph(&plan.chained).adjacency();
    let bip = bipartite_lift(&m).adjacency();
    let base = permanent(&m)?;
    let lp = pairing_sum(&bip)?;
    let lperm = permanent(&bip)?;
    let sq = &base * &base;
    let square_ratio = (!sq.is_zero()).then(|| (&lperm / &sq).to_f64().unwrap_or(f64::NAN));
    Ok(SquareRelation {
        square_holds: lperm == sq,
        pairing_holds: lp == base,
        base_permanent: base,
        lifted_pairing: lp,
        lifted_permanent: lperm,
        square_ratio,
    })
}

/// `(1 + n + n(n+1)/2)^n` against `271 + n^{2n}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlowBound {
    pub n: usize,
    pub patterns: String,
    pub claimed_bound: String,
    pub strict: bool,
    pub non_strict: bool,
}

pub fn flow_bound_check(n: usize) -> FlowBound {
    let lhs = flow_pattern_bound(n);
    let rhs = num_bigint::BigUint::from(271u32) + num_bigint::BigUint::from(n).pow(2 * n as u32);
    FlowBound { n, strict: lhs < rhs, non_strict: lhs <= rhs, patterns: lhs.to_string(), claimed_bound: rhs.to_string() }
}
