use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use neuroglue::cnf::{clause_literal_graph, random_ksat};
use neuroglue::net::{forward, HyperParams, NetParams};
use neuroglue::par;
use neuroglue::solver::{solve, Budget};
use neuroglue::{Formula, SolverConfig};

fn formulas(count: u64, n: u32) -> Vec<Formula> {
    let m = (4.26 * n as f64).round() as usize;
    (0..count).map(|s| random_ksat(n, m, 3, s).unwrap()).collect()
}

fn solver_batch(c: &mut Criterion) {
    let fs = formulas(16, 75);
    let run = |f: &Formula| solve(f, SolverConfig::default(), Budget::conflicts(20_000), None).status;
    let mut g = c.benchmark_group("solve_batch");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("rayon", fs.len()), |b| {
        b.iter(|| par::map(black_box(&fs), run))
    });
    g.bench_function(BenchmarkId::new("sequential", fs.len()), |b| {
        b.iter(|| par::map_seq(black_box(&fs), run))
    });
    g.finish();
}

fn forward_batch(c: &mut Criterion) {
    let graphs: Vec<_> = formulas(32, 50).iter().map(clause_literal_graph).collect();
    let h = HyperParams::supervised();
    let p = NetParams::init(&h, 0);
    let run = |g: &neuroglue::SparseGraph| forward(&p, &h, g, false, 0).unwrap().policy_logits;
    let mut g = c.benchmark_group("forward_batch");
    g.bench_function(BenchmarkId::new("rayon", graphs.len()), |b| {
        b.iter(|| par::map(black_box(&graphs), run))
    });
    g.bench_function(BenchmarkId::new("sequential", graphs.len()), |b| {
        b.iter(|| par::map_seq(black_box(&graphs), run))
    });
    g.finish();
}

criterion_group!(benches, solver_batch, forward_batch);
criterion_main!(benches);
