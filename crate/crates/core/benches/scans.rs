use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lhskit_core::builtins::{mcduff_model, torus_bundle, CAT_MAP};
use lhskit_core::dynamics::orbit_census;
use lhskit_core::lhs::{check_axioms, deformation_type, stabham_scan, GridSpec};
use lhskit_core::par::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn grid_scans(c: &mut Criterion) {
    let torus = torus_bundle(CAT_MAP).unwrap().structure;
    let mcduff = mcduff_model().unwrap().structure;
    let mut g = c.benchmark_group("grid_scans");
    g.sample_size(10);
    for (name, exec) in MODES {
        let grid = GridSpec::new(16, 512, 1).with_exec(exec);
        g.bench_with_input(BenchmarkId::new("deformation_type/torus", name), &grid, |b, grid| {
            b.iter(|| black_box(deformation_type(&torus, grid).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("check_axioms/mcduff", name), &grid, |b, grid| {
            b.iter(|| black_box(check_axioms(&mcduff, grid, 1e-9).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("stabham_scan/torus", name), &grid, |b, grid| {
            b.iter(|| black_box(stabham_scan(&torus, grid).unwrap()))
        });
    }
    g.finish();
}

fn census(c: &mut Criterion) {
    let mut g = c.benchmark_group("orbit_census");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("cat_map_k3", name), |b| {
            b.iter(|| black_box(orbit_census(CAT_MAP, 3, exec).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, grid_scans, census);
criterion_main!(benches);
