use std::hint::black_box;

use blockwht::oracle::{dense_rotate, fwht_scalar};
use blockwht::{ElementType, Engine, Exec, Matrix, TransformOptions, TransformSize};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

const ELEMENTS: usize = 1 << 18;

fn blocked(c: &mut Criterion) {
    let mut group = c.benchmark_group("blocked");
    group.sample_size(20);
    for d in [256usize, 4096, 32768] {
        let size = TransformSize::new(d).unwrap();
        let x = Matrix::random_normal(ELEMENTS / d, d, ElementType::F32, 1);
        group.throughput(Throughput::Elements(ELEMENTS as u64));
        for (name, exec) in [
            ("sequential", Exec::Sequential),
            ("parallel", Exec::Parallel),
        ] {
            let engine = Engine::new(exec);
            group.bench_with_input(BenchmarkId::new(name, d), &x, |b, x| {
                b.iter(|| {
                    engine
                        .transform(black_box(x.clone()), size, &TransformOptions::default())
                        .unwrap()
                })
            });
        }
    }
    group.finish();
}

fn references(c: &mut Criterion) {
    let mut group = c.benchmark_group("reference");
    group.sample_size(10);
    let d = 1024;
    let size = TransformSize::new(d).unwrap();
    let scale = 1.0 / 32.0;
    let x = Matrix::random_normal(16, d, ElementType::F64, 2);
    group.bench_function(BenchmarkId::new("blocked", d), |b| {
        b.iter(|| {
            Engine::sequential()
                .transform(black_box(x.clone()), size, &TransformOptions::default())
                .unwrap()
        })
    });
    group.bench_function(BenchmarkId::new("scalar", d), |b| {
        b.iter(|| fwht_scalar(black_box(x.clone()), scale, true).unwrap())
    });
    group.bench_function(BenchmarkId::new("dense", d), |b| {
        b.iter(|| dense_rotate(black_box(&x), d, scale).unwrap())
    });
    group.finish();
}

criterion_group!(benches, blocked, references);
criterion_main!(benches);
