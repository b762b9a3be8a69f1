use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use qbu_bench::{float_matrix, int_matrix, observations, symmetric_matrix, unit_digraph};
use qbu_core::graphred::{compile_dcc_to_qbu, ChainEvaluator};
use qbu_core::matchperm::{pairing_sum, permanent};
use qbu_core::satcompile::verify_lemma_bounds;
use qbu_core::sphere::{pnorm_exact, pnorm_montecarlo, ExpansionConfig};

fn permanents(c: &mut Criterion) {
    let mut g = c.benchmark_group("permanent");
    for n in [6, 10, 14] {
        let m = float_matrix(n, 1);
        g.bench_with_input(BenchmarkId::new("f64", n), &m, |b, m| b.iter(|| permanent(black_box(m)).unwrap()));
    }
    for n in [6, 10] {
        let m = int_matrix(n, 2);
        g.bench_with_input(BenchmarkId::new("rational", n), &m, |b, m| b.iter(|| permanent(black_box(m)).unwrap()));
    }
    g.finish();
}

fn pairings(c: &mut Criterion) {
    let mut g = c.benchmark_group("pairing_sum");
    for n in [8, 12, 16] {
        let m = symmetric_matrix(n, 3);
        g.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| b.iter(|| pairing_sum(black_box(m)).unwrap()));
    }
    g.finish();
}

fn pnorm(c: &mut Criterion) {
    let mut g = c.benchmark_group("pnorm");
    g.sample_size(10);
    for (d, n) in [(2, 4), (3, 4), (3, 6)] {
        let obs = observations(d, n, 4);
        g.bench_with_input(BenchmarkId::new("exact", format!("d{d}n{n}")), &obs, |b, o| {
            b.iter(|| pnorm_exact(black_box(o), &ExpansionConfig::default()).unwrap())
        });
    }
    let obs = observations(3, 4, 5);
    g.bench_function("mc/d3n4/100k", |b| b.iter(|| pnorm_montecarlo(black_box(&obs), 100_000, 1).unwrap()));
    g.finish();
}

fn lemma_sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("lemma_sweep");
    g.sample_size(10);
    for d in [3, 5] {
        g.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| b.iter(|| verify_lemma_bounds(d, 2000, 1).unwrap()));
    }
    g.finish();
}

fn chain_evaluator(c: &mut Criterion) {
    let mut g = c.benchmark_group("chain_evaluator");
    g.sample_size(10);
    for n in [2, 3] {
        let graph = unit_digraph(n, 6);
        let plan = compile_dcc_to_qbu(&graph).unwrap();
        let mut ev = ChainEvaluator::new(&plan.gadget, plan.links).unwrap();
        g.bench_with_input(BenchmarkId::new("plan", n), &plan, |b, p| b.iter(|| p.execute_with(&mut ev).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, permanents, pairings, pnorm, lemma_sweep, chain_evaluator);
criterion_main!(benches);
