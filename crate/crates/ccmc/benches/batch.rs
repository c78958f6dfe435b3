//! Parallel vs sequential solver batches on a representative instance.
//!
//! Run with `cargo bench -p ccmc`. The `run_batch` group uses rayon when the
//! default `parallel` feature is on; `run_batch_seq` is the always-sequential
//! reference path, and both must produce identical results.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ccmc::graph::gen_random_graph;
use ccmc::instance::init_random;
use ccmc::solvers::{run_batch, run_batch_seq, Algorithm, SolverConfig};

fn bench_batches(c: &mut Criterion) {
    let g = gen_random_graph(500, 0.02, 42).expect("graph");
    let inst = init_random(&g, 1000.0, 0.05, 42).expect("instance");

    let mut group = c.benchmark_group("solver_batch");
    group.sample_size(10);
    for &(algo, budget, runs) in &[
        (Algorithm::Ea, 2_000usize, 10usize),
        (Algorithm::Fga, 2_000, 10),
        (Algorithm::Sa, 2_000, 10),
    ] {
        let cfg = SolverConfig::new(algo, budget, 0);
        group.bench_with_input(
            BenchmarkId::new("parallel", algo.tag()),
            &cfg,
            |b, cfg| {
                b.iter(|| black_box(run_batch(cfg, &inst, &g, runs, 7).unwrap()));
            },
        );
        group.bench_with_input(
            BenchmarkId::new("sequential", algo.tag()),
            &cfg,
            |b, cfg| {
                b.iter(|| black_box(run_batch_seq(cfg, &inst, &g, runs, 7).unwrap()));
            },
        );
    }
    group.finish();
}

criterion_group!(benches, bench_batches);
criterion_main!(benches);
