use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kanon_bench::{desk_profile, instance, m_for_lambda};
use kanon_core::{assign_groups, project_graph, project_graph_sharded};

fn projection(c: &mut Criterion) {
    let profile = desk_profile();
    let m = m_for_lambda(&profile, 1.6);
    let (graph, assignment) = instance(&profile, m, 7);

    c.bench_function("assign_groups/desk", |b| b.iter(|| assign_groups(black_box(100_000), m, 7).unwrap()));
    c.bench_function("project_graph/desk", |b| b.iter(|| project_graph(black_box(&graph), &assignment).unwrap()));

    let mut group = c.benchmark_group("project_graph_sharded/desk");
    for workers in [1usize, 2, 4] {
        group.bench_with_input(BenchmarkId::from_parameter(workers), &workers, |b, &w| {
            b.iter(|| project_graph_sharded(&graph, &assignment, w).unwrap())
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = projection
}
criterion_main!(benches);
