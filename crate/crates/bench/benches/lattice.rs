use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use edgeflow_bench::orset;
use edgeflow_core::lattice::JoinSemilattice;
use edgeflow_core::{GCounter, ReplicaId};

fn orset_join(c: &mut Criterion) {
    let mut group = c.benchmark_group("orset_join");
    for ops in [16, 256, 4096] {
        let a = orset(1, ops, 4, ops as i64);
        let b = orset(2, ops, 4, ops as i64);
        group.bench_with_input(BenchmarkId::from_parameter(ops), &ops, |bench, _| {
            bench.iter(|| black_box(&a).join(black_box(&b)).unwrap())
        });
    }
    group.finish();
}

fn gcounter_join(c: &mut Criterion) {
    let mut group = c.benchmark_group("gcounter_join");
    for replicas in [4u32, 64, 1024] {
        let a: GCounter = (0..replicas)
            .map(|r| (ReplicaId(r), u64::from(r) + 1))
            .collect();
        let b: GCounter = (0..replicas)
            .map(|r| (ReplicaId(r), u64::from(replicas - r)))
            .collect();
        group.bench_with_input(
            BenchmarkId::from_parameter(replicas),
            &replicas,
            |bench, _| bench.iter(|| black_box(&a).join(black_box(&b))),
        );
    }
    group.finish();
}

criterion_group!(benches, orset_join, gcounter_join);
criterion_main!(benches);
