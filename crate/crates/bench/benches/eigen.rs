//! Kernel benchmarks: window normalization, the correlation matrix build,
//! and the two eigensolvers at panel scale (N = 20).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gepu_core::linalg::jacobi_eigen;
use gepu_core::pca::{
    correlation_matrix, leading_eigenpair, normalize_window, CorrelationMatrix, DEFAULT_EIGEN_TOL,
    DEFAULT_MAX_ITER,
};
use gepu_core::synthetic::one_factor_panel;
use gepu_core::Month;
use std::hint::black_box;

fn panel_window(n_economies: usize, window: usize) -> CorrelationMatrix {
    let start: Month = "2003-01".parse().unwrap();
    let (panel, _) = one_factor_panel(17, start, window, n_economies, 0.10);
    let nw = normalize_window(&panel, panel.last_month(), window).unwrap();
    correlation_matrix(&nw)
}

fn bench_eigensolvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigen");
    for &n in &[5usize, 10, 20] {
        let matrix = panel_window(n, 48);
        group.bench_with_input(BenchmarkId::new("power_iteration", n), &matrix, |b, m| {
            b.iter(|| leading_eigenpair(black_box(m), DEFAULT_EIGEN_TOL, DEFAULT_MAX_ITER).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("jacobi_full", n), &matrix, |b, m| {
            b.iter(|| jacobi_eigen(black_box(m.entries())).unwrap())
        });
    }
    group.finish();
}

fn bench_window_pipeline(c: &mut Criterion) {
    let start: Month = "2003-01".parse().unwrap();
    let (panel, _) = one_factor_panel(17, start, 48, 20, 0.10);
    let end = panel.last_month();

    c.bench_function("normalize_window_20x48", |b| {
        b.iter(|| normalize_window(black_box(&panel), end, 48).unwrap())
    });
    let nw = normalize_window(&panel, end, 48).unwrap();
    c.bench_function("correlation_matrix_20x48", |b| {
        b.iter(|| correlation_matrix(black_box(&nw)))
    });
}

criterion_group!(benches, bench_eigensolvers, bench_window_pipeline);
criterion_main!(benches);
