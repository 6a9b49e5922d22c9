use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use onebit::estimators::mle_quantized_joint;
use onebit::fisher::fim_quantized;
use onebit::qfunc::{info_factor, phi_n};
use onebit::signal::ChannelParams;
use onebit_bench::fixture;

fn qfunc(c: &mut Criterion) {
    let xs: Vec<f64> = (0..1000).map(|i| -12.0 + 0.024 * i as f64).collect();
    c.bench_function("phi_n/1000", |b| {
        b.iter(|| {
            xs.iter()
                .map(|&x| phi_n(black_box(x), 0.3).unwrap())
                .sum::<f64>()
        })
    });
    c.bench_function("info_factor/1000", |b| {
        b.iter(|| xs.iter().map(|&x| info_factor(black_box(x))).sum::<f64>())
    });
}

fn fisher(c: &mut Criterion) {
    let mut group = c.benchmark_group("fim_quantized");
    for n in [256, 1024, 4096] {
        let f = fixture(n);
        let params = ChannelParams::new(f.theta.clone(), f.alpha).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| fim_quantized(black_box(&f.pilot), &params).unwrap())
        });
    }
    group.finish();
}

fn estimators(c: &mut Criterion) {
    let mut group = c.benchmark_group("mle_quantized_joint");
    for n in [256, 1024] {
        let f = fixture(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| mle_quantized_joint(black_box(&f.pilot), black_box(&f.z)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, qfunc, fisher, estimators);
criterion_main!(benches);
