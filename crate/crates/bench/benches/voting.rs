use analogy_bench::{gate_samples, numeric_runs, verdicts};
use analogy_core::concept::{gate_decision, survivors, tiers, Criterion as Filter};
use analogy_core::inference::vote;
use analogy_core::simplify::consensus_of;
use analogy_core::SelectionConfig;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn voting(c: &mut Criterion) {
    let mut group = c.benchmark_group("vote");
    for k in [10, 100] {
        let runs = numeric_runs(k);
        group.bench_with_input(BenchmarkId::new("majority", k), &runs, |b, runs| {
            b.iter(|| vote(black_box(runs)))
        });
        group.bench_with_input(BenchmarkId::new("consensus", k), &runs, |b, runs| {
            b.iter(|| consensus_of(black_box(runs), k * 9 / 10))
        });
        let samples = gate_samples(k);
        group.bench_with_input(BenchmarkId::new("gate", k), &samples, |b, s| {
            b.iter(|| gate_decision(black_box(s), k * 9 / 10))
        });
    }
    group.finish();
}

fn selection(c: &mut Criterion) {
    let cfg = SelectionConfig::default();
    let mut group = c.benchmark_group("select");
    for n in [10, 1000] {
        let v = verdicts(n);
        group.bench_with_input(BenchmarkId::new("survivors", n), &v, |b, v| {
            b.iter(|| survivors(black_box(v), &Filter::ALL))
        });
        group.bench_with_input(BenchmarkId::new("tiers", n), &v, |b, v| {
            b.iter(|| tiers(black_box(v), cfg.high_threshold(10)))
        });
    }
    group.finish();
}

criterion_group!(benches, voting, selection);
criterion_main!(benches);
