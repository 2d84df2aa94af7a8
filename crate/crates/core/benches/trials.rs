use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use plsql_away::corpus::corpus_entry;
use plsql_away::harness::{diff_trials, diff_trials_sequential};

const TRIALS: usize = 64;

fn trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("diff_trials");
    group.sample_size(10);
    for name in ["walk", "parse"] {
        let entry = corpus_entry(name).unwrap();
        let compiled = entry.compile().unwrap();
        group.bench_with_input(BenchmarkId::new("parallel", name), &entry, |b, e| {
            b.iter(|| black_box(diff_trials(e, &compiled, TRIALS, 11)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", name), &entry, |b, e| {
            b.iter(|| black_box(diff_trials_sequential(e, &compiled, TRIALS, 11)))
        });
    }
    group.finish();
}

criterion_group!(benches, trials);
criterion_main!(benches);
