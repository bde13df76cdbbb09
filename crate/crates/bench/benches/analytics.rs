use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use kanon_core::analytics::{
    disconnect_prob_integral, disconnect_prob_mgf, log_spaced_grid, connection_curve, plan_light, plan_stream, table1,
    TABLE1_CONFIDENCES,
};
use kanon_core::simulation::strategy_random_poll;
use kanon_core::GraphProfile;

fn analytics(c: &mut Criterion) {
    let fb = GraphProfile::facebook();

    c.bench_function("disconnect_prob_integral/hybrid", |b| {
        b.iter(|| disconnect_prob_integral(black_box(&fb), 173_125).unwrap())
    });
    c.bench_function("disconnect_prob_mgf/hybrid", |b| b.iter(|| disconnect_prob_mgf(black_box(&fb), 173_125)));
    c.bench_function("plan_stream/hybrid", |b| b.iter(|| plan_stream(black_box(&fb), 1, 0.99).unwrap()));
    c.bench_function("plan_light", |b| b.iter(|| plan_light(black_box(&fb), 0.01).unwrap()));
    c.bench_function("table1", |b| b.iter(|| table1(black_box(&fb), &TABLE1_CONFIDENCES).unwrap()));

    let grid = log_spaced_grid(100_000, 4_000_000, 50);
    c.bench_function("connection_curve/50", |b| b.iter(|| connection_curve(black_box(&fb), &grid).unwrap()));

    let mut seed = 0u64;
    c.bench_function("strategy_random_poll/100", |b| {
        b.iter(|| {
            seed += 1;
            strategy_random_poll(100, seed).unwrap()
        })
    });
}

criterion_group!(benches, analytics);
criterion_main!(benches);
