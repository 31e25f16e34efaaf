use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ergokit::gluing::{glue, shadow, SegmentSpec};
use ergokit::historic::{build_schedule, construct_wild_point};
use ergokit::{MetricPoint, SymbolPoint};
use ergokit_bench::{doubling, full_shift, golden_mean, ones};

fn gluing(c: &mut Criterion) {
    let sys = golden_mean();
    let segs = (0..4)
        .map(|i| (MetricPoint::Symbol(SymbolPoint::periodic(&[0, (i % 2) as u8])), 8))
        .collect();
    let spec = SegmentSpec::new(segs, 0.125);
    c.bench_function("glue golden mean 4 segments", |b| b.iter(|| glue(black_box(&sys), &spec).unwrap()));

    let dbl = doubling();
    let pseudo: Vec<MetricPoint> = (0..100)
        .scan(0.3f64, |x, _| {
            let p = MetricPoint::Torus(vec![*x]);
            *x = (2.0 * *x + 1e-4).rem_euclid(1.0);
            Some(p)
        })
        .collect();
    c.bench_function("shadow doubling length 100", |b| {
        b.iter(|| shadow(black_box(&dbl), &pseudo, 1e-4, false).unwrap())
    });
}

fn wild(c: &mut Criterion) {
    let sys = full_shift(2);
    let sched = build_schedule(&sys, &ones(), &[vec![0.1], vec![0.9]], 3, 0.5).unwrap();
    let base = MetricPoint::Symbol(SymbolPoint::constant(0));
    let mut g = c.benchmark_group("historic");
    g.sample_size(10);
    g.bench_function("wild point depth 3", |b| {
        b.iter(|| construct_wild_point(&sys, &ones(), black_box(&sched), &base).unwrap())
    });
    g.finish();
}

criterion_group!(benches, gluing, wild);
criterion_main!(benches);
