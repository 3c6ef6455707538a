//! Costs of the analytic building blocks: the Gaussian tail used by every
//! link-ratio lookup, the retry-process enumeration behind the delivery
//! curves, and the backoff stationary-distribution oracle.

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use fademac_core::analytic::{
    backoff_markov_oracle, expected_backoff_slots, retry_process_oracle, AttemptProbabilities,
    BackoffParams, RetryLimits,
};
use fademac_core::math::{normal_cdf, normal_quantile};
use fademac_core::PropagationParams;

fn bench_normal(c: &mut Criterion) {
    c.bench_function("normal_cdf", |b| {
        b.iter(|| normal_cdf(black_box(1.234)));
    });
    c.bench_function("normal_quantile", |b| {
        b.iter(|| normal_quantile(black_box(0.8413)));
    });
    let p = PropagationParams::default();
    c.bench_function("link_delivery_ratio", |b| {
        b.iter(|| p.link_delivery_ratio(black_box(220.0)));
    });
}

fn bench_retry(c: &mut Criterion) {
    let limits = RetryLimits::default();
    c.bench_function("retry_process_oracle", |b| {
        b.iter(|| retry_process_oracle(AttemptProbabilities::new(black_box(0.63), true), limits));
    });
    c.bench_function("retry_oracle_101_grid", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for i in 0..=100 {
                let p = i as f64 / 100.0;
                acc += retry_process_oracle(AttemptProbabilities::new(p, true), limits);
            }
            acc
        });
    });
}

fn bench_backoff(c: &mut Criterion) {
    let bp = BackoffParams::default();
    c.bench_function("expected_backoff_slots", |b| {
        b.iter(|| expected_backoff_slots(black_box(0.66), bp));
    });
    c.bench_function("backoff_markov_oracle", |b| {
        b.iter(|| backoff_markov_oracle(black_box(0.66), bp));
    });
}

criterion_group!(benches, bench_normal, bench_retry, bench_backoff);
criterion_main!(benches);
