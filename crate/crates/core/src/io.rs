//! JSON formats for observation sets, matrices, graphs, SAT instances and
//! compiled instances.
//!
//! Rationals travel as strings (`"3/4"`, `"-2"`). Observation vectors may be
//! given as numbers, or as rational strings, in which case the observation
//! keeps an exact copy for rational-mode likelihoods.

use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exact::{ExactLikelihood, ExactVector, Factored};
use crate::graphred::{compile_dcc_to_qbu_with, CompileOptions, Edge, ReductionPlan, WeightedDigraph};
use crate::hilbert::{ComplexVector, Observation, ObservationSet};
use crate::matchperm::{DoubledMatrix, SquareMatrix, SymmetricMatrix};
use crate::satcompile::{CompiledCore, CompiledMle, CompiledQbu, Mnae3SatInstance};

pub(crate) fn ser_rational<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let r = match t.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| Error::invalid(format!("bad rational {s:?}")))?;
            let d = BigInt::from_str(d.trim()).map_err(|_| Error::invalid(format!("bad rational {s:?}")))?;
            if d.is_zero() {
                return Err(Error::invalid(format!("zero denominator in {s:?}")));
            }
            BigRational::new(n, d)
        }
        None => BigRational::from_integer(BigInt::from_str(t).map_err(|_| Error::invalid(format!("bad rational {s:?}")))?),
    };
    Ok(r)
}

/// Conversion to and from the JSON wire formats.
pub trait JsonFormat: Sized {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;

    fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json(&serde_json::from_str(s)?)
    }

    fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = serde_json::to_string_pretty(&self.to_json())?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }
}

fn parse<T: for<'de> Deserialize<'de>>(v: &Value) -> Result<T> {
    T::deserialize(v).map_err(|e| Error::invalid(e.to_string()))
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Num(f64),
    Text(String),
}

impl Scalar {
    fn rational(&self) -> Option<Result<BigRational>> {
        match self {
            Scalar::Text(s) => Some(parse_rational(s)),
            Scalar::Num(_) => None,
        }
    }

    fn float(&self) -> Result<f64> {
        match self {
            Scalar::Num(x) if x.is_finite() => Ok(*x),
            Scalar::Num(_) => Err(Error::invalid("non-finite number")),
            Scalar::Text(s) => parse_rational(s)?.to_f64().ok_or_else(|| Error::invalid(format!("{s:?} out of range"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum ItemJson {
    RankOne { v_re: Vec<Scalar>, v_im: Vec<Scalar>, mult: u64 },
    General { m_re: Vec<Vec<f64>>, m_im: Vec<Vec<f64>>, mult: u64 },
}

#[derive(Serialize, Deserialize)]
struct ObservationSetJson {
    d: usize,
    items: Vec<ItemJson>,
}

fn observation_from_item(d: usize, item: &ItemJson) -> Result<(Observation, u64)> {
    match item {
        ItemJson::RankOne { v_re, v_im, mult } => {
            if v_re.len() != d || v_im.len() != d {
                return Err(Error::invalid(format!("vector length must be {d}")));
            }
            let exact: Option<Result<Vec<_>>> = v_re
                .iter()
                .zip(v_im)
                .map(|(a, b)| match (a.rational(), b.rational()) {
                    (Some(a), Some(b)) => Some(a.and_then(|a| Ok(Complex::new(a, b?)))),
                    _ => None,
                })
                .collect();
            let obs = match exact {
                Some(entries) => Observation::rank_one_exact(ExactVector::new(entries?))?,
                None => {
                    let re = v_re.iter().map(Scalar::float).collect::<Result<Vec<_>>>()?;
                    let im = v_im.iter().map(Scalar::float).collect::<Result<Vec<_>>>()?;
                    crate::hilbert::projector_from_vector(&ComplexVector::from_parts(&re, &im)?)?
                }
            };
            Ok((obs, *mult))
        }
        ItemJson::General { m_re, m_im, mult } => {
            if m_re.len() != d || m_im.len() != d || m_re.iter().chain(m_im).any(|r| r.len() != d) {
                return Err(Error::invalid(format!("matrix must be {d} x {d}")));
            }
            let m = DMatrix::from_fn(d, d, |i, j| Complex::new(m_re[i][j], m_im[i][j]));
            Ok((Observation::general(m)?, *mult))
        }
    }
}

fn item_from_observation(o: &Observation, mult: u64) -> ItemJson {
    match o {
        Observation::RankOne { exact: Some(e), .. } => ItemJson::RankOne {
            v_re: e.entries().iter().map(|c| Scalar::Text(c.re.to_string())).collect(),
            v_im: e.entries().iter().map(|c| Scalar::Text(c.im.to_string())).collect(),
            mult,
        },
        Observation::RankOne { vector, .. } => ItemJson::RankOne {
            v_re: vector.entries().iter().map(|c| Scalar::Num(c.re)).collect(),
            v_im: vector.entries().iter().map(|c| Scalar::Num(c.im)).collect(),
            mult,
        },
        Observation::General { matrix } => {
            let d = matrix.nrows();
            ItemJson::General {
                m_re: (0..d).map(|i| (0..d).map(|j| matrix[(i, j)].re).collect()).collect(),
                m_im: (0..d).map(|i| (0..d).map(|j| matrix[(i, j)].im).collect()).collect(),
                mult,
            }
        }
    }
}

impl JsonFormat for ObservationSet {
    fn to_json(&self) -> Value {
        let j = ObservationSetJson { d: self.dim(), items: self.items().iter().map(|(o, m)| item_from_observation(o, *m)).collect() };
        serde_json::to_value(j).expect("serialisable")
    }

    fn from_json(v: &Value) -> Result<Self> {
        let j: ObservationSetJson = parse(v)?;
        let items = j.items.iter().map(|it| observation_from_item(j.d, it)).collect::<Result<Vec<_>>>()?;
        ObservationSet::from_items(j.d, items)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    size: usize,
    rows: Vec<Vec<f64>>,
}

impl JsonFormat for SquareMatrix<f64> {
    fn to_json(&self) -> Value {
        serde_json::to_value(MatrixJson { size: self.size(), rows: self.rows() }).expect("serialisable")
    }

    fn from_json(v: &Value) -> Result<Self> {
        let j: MatrixJson = parse(v)?;
        if j.rows.len() != j.size {
            return Err(Error::invalid(format!("expected {} rows, got {}", j.size, j.rows.len())));
        }
        if j.rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        SquareMatrix::from_rows(j.rows)
    }
}

impl JsonFormat for DoubledMatrix {
    fn to_json(&self) -> Value {
        self.matrix().matrix().to_json()
    }

    fn from_json(v: &Value) -> Result<Self> {
        DoubledMatrix::new(SymmetricMatrix::new(SquareMatrix::from_json(v)?)?)
    }
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<(usize, usize, Scalar)>,
}

impl JsonFormat for WeightedDigraph {
    fn to_json(&self) -> Value {
        let edges = self.edges().iter().map(|e| (e.from, e.to, Scalar::Text(e.weight.to_string()))).collect();
        serde_json::to_value(GraphJson { n: self.n(), edges }).expect("serialisable")
    }

    fn from_json(v: &Value) -> Result<Self> {
        let j: GraphJson = parse(v)?;
        let edges = j
            .edges
            .iter()
            .map(|(from, to, w)| {
                let weight = match w {
                    Scalar::Text(s) => parse_rational(s)?,
                    Scalar::Num(x) if x.fract() == 0.0 && x.abs() < 2f64.powi(53) => BigRational::from_integer(BigInt::from(*x as i64)),
                    Scalar::Num(x) => return Err(Error::invalid(format!("weight {x} must be an integer or a rational string"))),
                };
                Ok(Edge { from: *from, to: *to, weight })
            })
            .collect::<Result<Vec<_>>>()?;
        WeightedDigraph::new(j.n, edges)
    }
}

#[derive(Serialize, Deserialize)]
struct SatJson {
    d: usize,
    clauses: Vec<Vec<usize>>,
}

impl JsonFormat for Mnae3SatInstance {
    fn to_json(&self) -> Value {
        serde_json::to_value(SatJson { d: self.d(), clauses: self.clauses().iter().map(|c| c.to_vec()).collect() }).expect("serialisable")
    }

    fn from_json(v: &Value) -> Result<Self> {
        let j: SatJson = parse(v)?;
        let clauses = j
            .clauses
            .iter()
            .map(|c| <[usize; 3]>::try_from(c.as_slice()).map_err(|_| Error::invalid(format!("clause {c:?} must have three entries"))))
            .collect::<Result<Vec<_>>>()?;
        Mnae3SatInstance::new(j.d, clauses)
    }
}

/// A compiled instance as stored on disk.
#[derive(Clone, Debug)]
pub enum CompiledInstance {
    SatMle(CompiledMle),
    SatQbu(CompiledQbu),
    Graph { plan: Box<ReductionPlan> },
}

impl CompiledInstance {
    pub fn kind(&self) -> &'static str {
        match self {
            CompiledInstance::SatMle(_) => "sat-mle",
            CompiledInstance::SatQbu(_) => "sat-qbu",
            CompiledInstance::Graph { .. } => "graph-qbu",
        }
    }

    /// The observation set, for the SAT-side kinds.
    pub fn observations(&self) -> Option<&ObservationSet> {
        match self {
            CompiledInstance::SatMle(c) => Some(&c.core.observations),
            CompiledInstance::SatQbu(c) => Some(&c.core.observations),
            CompiledInstance::Graph { .. } => None,
        }
    }
}

fn likelihood_json(p: &ExactLikelihood) -> Value {
    match p {
        ExactLikelihood::Zero => json!({"zero": true, "factors": []}),
        ExactLikelihood::Positive(f) => json!({
            "zero": false,
            "factors": f.powers().map(|(b, e)| [b.to_string(), e.to_string()]).collect::<Vec<_>>(),
        }),
    }
}

fn likelihood_from_json(v: &Value) -> Result<ExactLikelihood> {
    #[derive(Deserialize)]
    struct P {
        zero: bool,
        factors: Vec<(String, String)>,
    }
    let p: P = parse(v)?;
    if p.zero {
        return Ok(ExactLikelihood::Zero);
    }
    let powers = p
        .factors
        .iter()
        .map(|(b, e)| {
            let b = BigUint::from_str(b).map_err(|_| Error::invalid(format!("bad base {b:?}")))?;
            let e = BigInt::from_str(e).map_err(|_| Error::invalid(format!("bad exponent {e:?}")))?;
            Ok((b, e))
        })
        .collect::<Result<Vec<_>>>()?;
    Factored::from_powers(powers).map(ExactLikelihood::Positive).ok_or_else(|| Error::invalid("factor bases must exceed 1"))
}

fn core_json(kind: &str, core: &CompiledCore) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("kind".into(), json!(kind));
    m.insert("d".into(), json!(core.d()));
    m.insert("clauses".into(), json!(core.instance.clauses()));
    m.insert("K1".into(), json!(core.k1));
    m.insert("K2".into(), json!(core.k2));
    m.insert("reps".into(), json!(core.reps));
    m.insert("log_p".into(), json!(core.log_p()));
    m.insert("p".into(), likelihood_json(&core.p));
    m.insert("observations".into(), core.observations.to_json());
    m
}

fn core_from_json(v: &Value) -> Result<CompiledCore> {
    let inst = Mnae3SatInstance::from_json(v)?;
    let field = |k: &str| v.get(k).ok_or_else(|| Error::invalid(format!("missing field {k:?}")));
    let int = |k: &str| field(k)?.as_u64().ok_or_else(|| Error::invalid(format!("{k:?} must be a nonnegative integer")));
    let observations = ObservationSet::from_json(field("observations")?)?;
    if observations.dim() != inst.d() {
        return Err(Error::invalid("observation dimension does not match d"));
    }
    Ok(CompiledCore {
        instance: inst,
        observations,
        k1: int("K1")?,
        k2: int("K2")?,
        reps: int("reps")?,
        p: likelihood_from_json(field("p")?)?,
    })
}

impl JsonFormat for CompiledInstance {
    fn to_json(&self) -> Value {
        match self {
            CompiledInstance::SatMle(c) => {
                let mut m = core_json(self.kind(), &c.core);
                m.insert("C".into(), json!(c.c));
                m.insert("log_gap".into(), json!(c.log_gap));
                Value::Object(m)
            }
            CompiledInstance::SatQbu(c) => {
                let mut m = core_json(self.kind(), &c.core);
                m.insert("C".into(), Value::Null);
                m.insert("eps_g".into(), json!(c.eps_g.to_string()));
                m.insert("overridden".into(), json!(c.overridden));
                Value::Object(m)
            }
            CompiledInstance::Graph { plan } => json!({
                "kind": self.kind(),
                "graph": plan.original.to_json(),
                "gadget_mask": plan.gadget_mask,
                "links": plan.links,
                "plan": serde_json::to_value(plan.as_ref()).expect("serialisable"),
            }),
        }
    }

    fn from_json(v: &Value) -> Result<Self> {
        let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| Error::invalid("missing \"kind\""))?;
        match kind {
            "sat-mle" => {
                let core = core_from_json(v)?;
                let c = v.get("C").and_then(Value::as_f64).ok_or_else(|| Error::invalid("sat-mle needs a numeric \"C\""))?;
                let log_gap = v.get("log_gap").and_then(Value::as_f64).unwrap_or(c.ln() * core.reps as f64);
                Ok(CompiledInstance::SatMle(CompiledMle { core, c, log_gap }))
            }
            "sat-qbu" => {
                let core = core_from_json(v)?;
                let eps_g = parse_rational(v.get("eps_g").and_then(Value::as_str).ok_or_else(|| Error::invalid("sat-qbu needs \"eps_g\""))?)?;
                let overridden = v.get("overridden").and_then(Value::as_bool).unwrap_or(false);
                Ok(CompiledInstance::SatQbu(CompiledQbu { core, eps_g, overridden }))
            }
            "graph-qbu" => {
                let graph = WeightedDigraph::from_json(v.get("graph").ok_or_else(|| Error::invalid("missing \"graph\""))?)?;
                let links = v.get("links").and_then(Value::as_u64).map(|l| l as usize);
                let plan = compile_dcc_to_qbu_with(&graph, &CompileOptions { links, gadget: None })?;
                if let Some(mask) = v.get("gadget_mask").and_then(Value::as_u64) {
                    if mask != u64::from(plan.gadget_mask) {
                        return Err(Error::invalid("stored gadget differs from the canonical search result"));
                    }
                }
                Ok(CompiledInstance::Graph { plan: Box::new(plan) })
            }
            other => Err(Error::invalid(format!("unknown instance kind {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::satcompile::{compile_mle, compile_qbu};

    #[test]
    fn rationals_parse() {
        assert_eq!(parse_rational(" -3/6 ").unwrap(), BigRational::new((-1).into(), 2.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn graph_round_trip() {
        let g = WeightedDigraph::from_json_str(r#"{"n": 2, "edges": [[0, 1, "1/2"], [1, 0, 3]]}"#).unwrap();
        assert_eq!(WeightedDigraph::from_json(&g.to_json()).unwrap(), g);
        assert!(WeightedDigraph::from_json_str(r#"{"n": 1, "edges": [[0, 1, "1"]]}"#).is_err());
    }

    #[test]
    fn compiled_round_trip_keeps_constants() {
        let inst = Mnae3SatInstance::new(3, vec![[1, 2, 3]]).unwrap();
        let mle = compile_mle(&inst, 2.0).unwrap();
        let back = CompiledInstance::from_json(&CompiledInstance::SatMle(mle.clone()).to_json()).unwrap();
        let CompiledInstance::SatMle(b) = back else { panic!("kind changed") };
        assert_eq!((b.core.k1, b.core.k2, &b.core.p), (mle.core.k1, mle.core.k2, &mle.core.p));
        assert!(b.core.observations.all_exact());
        let qbu = compile_qbu(&inst, Some((2, 3))).unwrap();
        let back = CompiledInstance::from_json(&CompiledInstance::SatQbu(qbu.clone()).to_json()).unwrap();
        let CompiledInstance::SatQbu(b) = back else { panic!("kind changed") };
        assert_eq!((b.eps_g, b.overridden), (qbu.eps_g, true));
    }

    #[test]
    fn observation_set_numeric_items() {
        let s = ObservationSet::from_json_str(r#"{"d": 2, "items": [{"v_re": [1, 0], "v_im": [0, 1], "mult": 2},
            {"m_re": [[1, 0], [0, 0]], "m_im": [[0, 0], [0, 0]], "mult": 1}]}"#)
        .unwrap();
        assert_eq!(s.expanded_len(), 3);
        assert!(!s.all_rank_one());
    }
}
