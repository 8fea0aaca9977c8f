use std::hint::black_box;

use aixilab_bench::{envs, lifetime_query};
use aixilab_core::value::{truncated_sum, value_at};
use aixilab_core::{Discount, Planner, TieOrder, Variant};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn horizons(c: &mut Criterion) {
    let mut group = c.benchmark_group("optimal_value");
    for (name, env) in envs() {
        for m in [2, 4, 6] {
            for variant in [Variant::Iterative, Variant::Recursive] {
                let q = lifetime_query(env.clone(), m, variant);
                group.bench_with_input(
                    BenchmarkId::new(format!("{name}/{}", variant.as_str()), m),
                    &q,
                    |b, q| b.iter(|| value_at(black_box(q), m, None).unwrap()),
                );
            }
        }
    }
    group.finish();
}

fn raw_sums(c: &mut Criterion) {
    let mut group = c.benchmark_group("truncated_sum");
    for (name, env) in envs() {
        let q = lifetime_query(env, 5, Variant::Iterative);
        group.bench_function(name, |b| {
            b.iter(|| truncated_sum(black_box(&q), 5).unwrap())
        });
    }
    group.finish();
}

fn decisions(c: &mut Criterion) {
    let mut group = c.benchmark_group("act_exact");
    let tie = TieOrder::natural(2);
    for (name, env) in envs() {
        let discount = Discount::geometric(aixilab_core::approx::rat(1, 2)).unwrap();
        group.bench_function(name, |b| {
            // fresh planner per iteration so the memo does not carry over
            b.iter(|| {
                let planner = Planner::new(env.clone(), discount.clone(), Variant::Recursive)
                    .with_horizon_cap(5);
                planner.act_exact(&aixilab_core::History::new(), &tie)
            })
        });
    }
    group.finish();
}

criterion_group!(benches, horizons, raw_sums, decisions);
criterion_main!(benches);
