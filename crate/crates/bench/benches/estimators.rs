use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ergokit::complexity::{entropy_estimate, katok_entropy, pressure_estimate};
use ergokit::rotation::estimate_rotation_set;
use ergokit::Sampler;
use ergokit_bench::{dyadic, full_shift, golden_mean, ones, shear};

fn complexity(c: &mut Criterion) {
    let n: Vec<usize> = (6..=14).collect();
    let golden = golden_mean();
    c.bench_function("entropy golden mean 2^-3..2^-6 x 6..14", |b| {
        b.iter(|| entropy_estimate(black_box(&golden), &dyadic(3, 6), &n).unwrap())
    });
    let full2 = full_shift(2);
    c.bench_function("pressure full shift cylinder", |b| {
        b.iter(|| pressure_estimate(black_box(&full2), &ones(), &dyadic(3, 6), &n).unwrap())
    });
    let mut g = c.benchmark_group("katok");
    g.sample_size(10);
    g.bench_function("bernoulli 0.3, 1e4 samples", |b| {
        b.iter(|| {
            katok_entropy(&full2, &Sampler::bernoulli(0.3), None, 0.1, &dyadic(1, 2), &(5..=11).collect::<Vec<_>>(), 10_000, 7)
                .unwrap()
        })
    });
    g.finish();
}

fn rotation(c: &mut Criterion) {
    let sys = shear();
    let mut g = c.benchmark_group("rotation");
    g.sample_size(10);
    g.bench_function("shear 16 seeds x 1e4", |b| {
        b.iter(|| estimate_rotation_set(black_box(&sys), 16, 10_000, 1, 4).unwrap())
    });
    g.finish();
}

criterion_group!(benches, complexity, rotation);
criterion_main!(benches);
