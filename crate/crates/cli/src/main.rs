use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qbu_core::estimators::{maximize_likelihood, posterior_density, rho_avg};
use qbu_core::graphred::{compile_dcc_to_qbu_with, CompileOptions, Evaluator};
use qbu_core::matchperm::{extract_base_permanent, pnorm_via_pairings, Functional, NodeKind};
use qbu_core::satcompile::{compile_mle, compile_qbu};
use qbu_core::sphere::{pnorm_exact, pnorm_montecarlo, sphere_area};
use qbu_core::verify::{run_suite, RunReport, SuiteConfig, SUITES};
use qbu_core::{
    CompiledInstance, ComplexVector, Convention, DoubledMatrix, Error, ExpansionConfig, JsonFormat, Mnae3SatInstance,
    ObservationSet, PureState, WeightedDigraph,
};

#[derive(Parser)]
#[command(name = "qbu", version, about = "Bayesian updating on pure states: compile, evaluate, verify")]
struct Cli {
    /// Worker threads for parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a SAT instance or a weighted digraph into an observation instance.
    Compile(CompileArgs),
    /// Evaluate p_norm or an estimator on an instance.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Run a verification suite and write a JSON report.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    SatMle,
    SatQbu,
    GraphQbu,
}

#[derive(Args)]
struct CompileArgs {
    #[arg(value_enum)]
    target: Target,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Approximation ratio for the maximum-likelihood constants.
    #[arg(long = "C", default_value_t = 2.0)]
    c: f64,
    /// Override K1 (sat-qbu only; requires --k2).
    #[arg(long, requires = "k2")]
    k1: Option<u64>,
    #[arg(long, requires = "k1")]
    k2: Option<u64>,
    /// Override the chain length (graph-qbu only).
    #[arg(long)]
    links: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Mc,
    Pairings,
}

#[derive(Clone, Copy, ValueEnum)]
enum Conv {
    Raw,
    Normalized,
}

impl From<Conv> for Convention {
    fn from(c: Conv) -> Self {
        match c {
            Conv::Raw => Convention::Raw,
            Conv::Normalized => Convention::Normalized,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FunctionalArg {
    Permanent,
    Pairing,
}

#[derive(Clone, Copy, ValueEnum)]
enum NodesArg {
    Equispaced,
    Chebyshev,
}

#[derive(Args)]
struct Io {
    /// Observation set, or a compiled SAT instance.
    #[arg(long = "in")]
    input: PathBuf,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Probability of the observations under the Haar prior.
    Pnorm {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value = "exact")]
        method: Method,
        #[arg(long, value_enum, default_value = "normalized")]
        convention: Conv,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Largest expansion degree before the exact method gives up.
        #[arg(long, default_value_t = ExpansionConfig::default().max_degree)]
        max_degree: u32,
    },
    /// Bayesian mean state.
    Rho {
        #[command(flatten)]
        io: Io,
    },
    /// Posterior density at a state given as {"re": [...], "im": [...]}.
    Posterior {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        state: PathBuf,
    },
    /// Maximum-likelihood search with random restarts.
    Mle {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Recover a functional of A - I[2] from a doubled matrix by interpolation.
    Extract {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value = "permanent")]
        functional: FunctionalArg,
        #[arg(long, value_enum, default_value = "equispaced")]
        nodes: NodesArg,
    },
    /// Run a compiled graph instance and recover the cycle-cover count.
    Count {
        #[command(flatten)]
        io: Io,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite to run.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUITES), required_unless_present = "suite")]
    name: Option<String>,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SUITES), conflicts_with = "name")]
    suite: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let res = match cli.command {
        Command::Compile(a) => compile(a),
        Command::Eval(e) => eval(e),
        Command::Verify(v) => verify(v, argv),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn emit(value: &Value, out: Option<&Path>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn compile(a: CompileArgs) -> Result<u8, Error> {
    let compiled = match a.target {
        Target::SatMle => CompiledInstance::SatMle(compile_mle(&Mnae3SatInstance::read(&a.input)?, a.c)?),
        Target::SatQbu => CompiledInstance::SatQbu(compile_qbu(&Mnae3SatInstance::read(&a.input)?, a.k1.zip(a.k2))?),
        Target::GraphQbu => {
            let g = WeightedDigraph::read(&a.input)?;
            let plan = compile_dcc_to_qbu_with(&g, &CompileOptions { links: a.links, gadget: None })?;
            CompiledInstance::Graph { plan: Box::new(plan) }
        }
    };
    compiled.write(&a.out)?;
    Ok(0)
}

/// Loads either a bare observation set or a compiled SAT instance.
fn load_observations(path: &Path) -> Result<(ObservationSet, Option<CompiledInstance>), Error> {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if v.get("kind").is_some() {
        let c = CompiledInstance::from_json(&v)?;
        let obs = c
            .observations()
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("a {} instance has no observation set; use `eval count`", c.kind())))?;
        Ok((obs, Some(c)))
    } else {
        Ok((ObservationSet::from_json(&v)?, None))
    }
}

fn complex_rows(m: &qbu_core::estimators::DensityMatrix) -> Value {
    let a = m.matrix();
    let part = |f: fn(&num_complex::Complex<f64>) -> f64| -> Vec<Vec<f64>> {
        (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| f(&a[(i, j)])).collect()).collect()
    };
    json!({"re": part(|z| z.re), "im": part(|z| z.im)})
}

fn eval(cmd: EvalCommand) -> Result<u8, Error> {
    let (value, out) = match cmd {
        EvalCommand::Pnorm { io, method, convention, samples, seed, max_degree } => {
            let (obs, _) = load_observations(&io.input)?;
            let conv: Convention = convention.into();
            let v = match method {
                Method::Exact => {
                    let r = pnorm_exact(&obs, &ExpansionConfig { max_degree })?;
                    json!({
                        "method": "exact",
                        "convention": conv,
                        "value": r.value(conv),
                        "exact_normalized": r.exact_normalized.map(|q| q.to_string()),
                        "term_counts": r.term_counts,
                    })
                }
                Method::Mc => {
                    let r = pnorm_montecarlo(&obs, samples, seed)?;
                    let scale = match conv {
                        Convention::Normalized => 1.0,
                        Convention::Raw => sphere_area(2 * obs.dim()).value(),
                    };
                    json!({
                        "method": "mc",
                        "convention": conv,
                        "value": r.mean * scale,
                        "stderr": r.stderr * scale,
                        "samples": r.samples,
                        "seed": seed,
                    })
                }
                Method::Pairings => {
                    let raw = pnorm_via_pairings(&obs)?;
                    let value = match conv {
                        Convention::Raw => raw,
                        Convention::Normalized => raw / sphere_area(2 * obs.dim()).value(),
                    };
                    json!({"method": "pairings", "convention": conv, "value": value})
                }
            };
            (v, io.out)
        }
        EvalCommand::Rho { io } => {
            let (obs, _) = load_observations(&io.input)?;
            let rho = rho_avg(&obs, &ExpansionConfig::default())?;
            let exact = rho
                .exact()
                .map(|rows| rows.iter().map(|r| r.iter().map(|z| [z.re.to_string(), z.im.to_string()]).collect::<Vec<_>>()).collect::<Vec<_>>());
            (json!({"estimator": "rho_avg", "matrix": complex_rows(&rho), "exact": exact, "trace": rho.trace()}), io.out)
        }
        EvalCommand::Posterior { io, state } => {
            let (obs, _) = load_observations(&io.input)?;
            let s: Value = serde_json::from_str(&std::fs::read_to_string(&state)?)?;
            let part = |k: &str| -> Result<Vec<f64>, Error> {
                serde_json::from_value(s.get(k).cloned().unwrap_or(Value::Array(vec![])))
                    .map_err(|e| Error::InvalidInput(format!("state field {k:?}: {e}")))
            };
            let (re, mut im) = (part("re")?, part("im")?);
            if im.is_empty() {
                im = vec![0.0; re.len()];
            }
            let psi = PureState::from_unnormalized(ComplexVector::from_parts(&re, &im)?)?;
            let density = posterior_density(&obs, &psi, &ExpansionConfig::default())?;
            (json!({"estimator": "posterior_density", "convention": "normalized", "value": density}), io.out)
        }
        EvalCommand::Mle { io, restarts, seed } => {
            let (obs, compiled) = load_observations(&io.input)?;
            let r = maximize_likelihood(&obs, restarts, seed)?;
            let state = r.state.vector().entries().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>();
            let mut v = json!({
                "estimator": "mle",
                "log_likelihood": r.log_likelihood,
                "state": state,
                "starts": r.starts,
                "best_start": r.best_start,
                "seed": seed,
            });
            let log_p = match &compiled {
                Some(CompiledInstance::SatMle(c)) => Some(c.core.log_p()),
                Some(CompiledInstance::SatQbu(c)) => Some(c.core.log_p()),
                _ => None,
            };
            if let Some(lp) = log_p {
                v["log_p"] = json!(lp);
                v["margin"] = json!(lp - r.log_likelihood);
            }
            (v, io.out)
        }
        EvalCommand::Extract { io, functional, nodes } => {
            let a = DoubledMatrix::read(&io.input)?;
            let f = match functional {
                FunctionalArg::Permanent => Functional::Permanent,
                FunctionalArg::Pairing => Functional::Pairing,
            };
            let k = match nodes {
                NodesArg::Equispaced => NodeKind::Equispaced,
                NodesArg::Chebyshev => NodeKind::Chebyshev,
            };
            (serde_json::to_value(extract_base_permanent(&a, f, k)?)?, io.out)
        }
        EvalCommand::Count { io } => {
            let c = CompiledInstance::read(&io.input)?;
            let CompiledInstance::Graph { plan } = c else {
                return Err(Error::InvalidInput(format!("`eval count` needs a graph-qbu instance, got {}", c.kind())));
            };
            let o = plan.execute(Evaluator::Structured)?;
            (
                json!({
                    "count": o.count.to_string(),
                    "leading": o.leading.to_string(),
                    "twin_weighted": o.twin_weighted.to_string(),
                    "chain_normalised": o.chain_normalised.to_string(),
                    "residual": o.residual,
                    "links": plan.links,
                }),
                io.out,
            )
        }
    };
    emit(&value, out.as_deref())?;
    Ok(0)
}

fn verify(v: VerifyArgs, argv: Vec<String>) -> Result<u8, Error> {
    let suite = v.name.or(v.suite).expect("clap enforces one of the two");
    let started = Instant::now();
    let cfg = SuiteConfig { seed: v.seed, samples: v.samples, d: v.d };
    let checks = run_suite(&suite, &cfg)?;
    let config = serde_json::to_vec(&json!({"suite": suite, "config": cfg}))?;
    let report = RunReport::new(argv, &config, checks, started);
    for c in &report.checks {
        eprintln!("{:7} {}", format!("{:?}", c.status).to_lowercase(), c.name);
    }
    emit(&serde_json::to_value(&report)?, v.out.as_deref())?;
    Ok(if report.all_passed() { 0 } else { 1 })
}
