use std::hint::black_box;

use bubble_bs::harness::{price_surface, price_surface_sequential, SurfaceSpec};
use bubble_bs::pde::{solve, GridConfig};
use bubble_bs::{MarketParams, Method, SquareBubble};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn surface(c: &mut Criterion) {
    let mp = MarketParams::new(0.2, 0.8, 0.4, 100.0, 1.0).unwrap();
    let bubble = SquareBubble::from_ratio(0.4, 0.25, 0.75, &mp).unwrap();
    let spec = SurfaceSpec {
        s_max: 300.0,
        n_s: 120,
        n_tau: 80,
    };
    let mut group = c.benchmark_group("surface_exact12");
    let method = Method::ExactSeries { n_max: 12 };
    group.bench_function(BenchmarkId::new("sequential", spec.n_s * spec.n_tau), |b| {
        b.iter(|| price_surface_sequential(black_box(&mp), &bubble, method, &spec).unwrap())
    });
    group.bench_function(
        BenchmarkId::new(
            if bubble_bs::sweep::is_parallel() {
                "rayon"
            } else {
                "map_collect_seq"
            },
            spec.n_s * spec.n_tau,
        ),
        |b| b.iter(|| price_surface(black_box(&mp), 0.25, 0.75, 0.4, method, &spec).unwrap()),
    );
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mp = MarketParams::new(0.2, 0.8, 0.4, 100.0, 1.0).unwrap();
    let bubble = SquareBubble::from_ratio(0.4, 0.25, 0.75, &mp).unwrap();
    let mut group = c.benchmark_group("crank_nicolson");
    group.sample_size(10);
    for n in [200usize, 400, 800] {
        let cfg = GridConfig::new(n, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| {
            b.iter(|| solve(black_box(&mp), &bubble, cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, surface, oracle);
criterion_main!(benches);
