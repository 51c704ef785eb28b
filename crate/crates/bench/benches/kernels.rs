use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use qwalk_core::continuum::{evolve_pde, ContinuumState};
use qwalk_core::schwarzschild::{integrate_null_geodesic, make_bh_field};
use qwalk_core::walk::{init_gaussian, step, step_s2};
use qwalk_core::{CoinAngleField, Complex64, LatticeGrid, SchwarzschildParams};

fn spin() -> (Complex64, Complex64) {
    (Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0))
}

fn walk_kernels(c: &mut Criterion) {
    let field = make_bh_field(SchwarzschildParams::new(150.0, 1.0).unwrap());
    let mut group = c.benchmark_group("walk");
    for sites in [1024usize, 4096, 16384] {
        let grid = LatticeGrid::from_extent(sites, 0.5, -10.0).unwrap();
        let state = init_gaussian(grid, 50.5, 1.58, spin()).unwrap();
        group.throughput(Throughput::Elements(sites as u64));
        group.bench_with_input(BenchmarkId::new("step", sites), &state, |b, s| {
            b.iter(|| step(black_box(s), &field).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("step_s2", sites), &state, |b, s| {
            b.iter(|| step_s2(black_box(s), &field).unwrap())
        });
    }
    group.finish();
}

fn continuum_kernels(c: &mut Criterion) {
    let field = CoinAngleField::SmoothTest { theta0: 0.5, amplitude: 0.2, wavenumber: 0.1, omega: 0.1 };
    let h = 0.0125;
    let state = ContinuumState::gaussian(-40.0, h, 6401, &field, 0.0, 1.0, spin()).unwrap();
    c.bench_function("evolve_pde/100_steps", |b| b.iter(|| evolve_pde(black_box(&state), &field, h, 100).unwrap()));

    let p = SchwarzschildParams::new(150.0, 1.0).unwrap();
    c.bench_function("geodesic/horizon_T300", |b| {
        b.iter(|| integrate_null_geodesic(&p, black_box((0.0, 100.0)), 1, 0.05, 300.0, None).unwrap())
    });
}

criterion_group!(benches, walk_kernels, continuum_kernels);
criterion_main!(benches);
