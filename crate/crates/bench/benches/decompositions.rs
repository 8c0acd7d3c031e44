use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tensor_denoise_bench::{gaussian_matrix, gaussian_tensor};
use tensor_denoise_core::{als_cp, hosvd, svd, tt_svd, AlsOptions};

fn bench_svd(c: &mut Criterion) {
    let mut group = c.benchmark_group("svd");
    for (rows, cols) in [(16, 16), (64, 64), (16, 256)] {
        let a = gaussian_matrix(rows, cols, 1);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{rows}x{cols}")),
            &a,
            |b, a| b.iter(|| svd(black_box(a)).unwrap()),
        );
    }
    group.finish();
}

fn bench_als(c: &mut Criterion) {
    let mut group = c.benchmark_group("als_cp");
    let t = gaussian_tensor(&[16, 16, 16], 2);
    let opts = AlsOptions {
        max_sweeps: 50,
        ..AlsOptions::default()
    };
    for rank in [1, 4, 8] {
        group.bench_with_input(BenchmarkId::from_parameter(rank), &rank, |b, &r| {
            b.iter(|| als_cp(black_box(&t), r, &opts).unwrap())
        });
    }
    group.finish();
}

fn bench_hosvd(c: &mut Criterion) {
    let t = gaussian_tensor(&[8, 8, 8, 8], 3);
    c.bench_function("hosvd/8^4 rank 4", |b| {
        b.iter(|| hosvd(black_box(&t), 4).unwrap())
    });
}

fn bench_tt_svd(c: &mut Criterion) {
    let t = gaussian_tensor(&[4; 6], 4);
    c.bench_function("tt_svd/4^6 rank 8", |b| {
        b.iter(|| tt_svd(black_box(&t), 8).unwrap())
    });
}

criterion_group!(benches, bench_svd, bench_als, bench_hosvd, bench_tt_svd);
criterion_main!(benches);
