//! Sequential (`jobs = 1`) against the rayon pool (`jobs = 0`) on the sweeps
//! that dominate a check run. Build with `--no-default-features` to time the
//! pure sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use dkp_core::boson::{alpha_intertwining, Sigma};
use dkp_core::fock::{clifford_check, heisenberg_check};
use dkp_core::wcon::{commutator_residuals, default_window, CommutatorKind};

fn jobs_list() -> Vec<(&'static str, usize)> {
    vec![("sequential", 1), ("parallel", 0)]
}

fn sweeps(c: &mut Criterion) {
    let mut g = c.benchmark_group("sweeps");
    g.sample_size(10);
    for (name, jobs) in jobs_list() {
        g.bench_with_input(BenchmarkId::new("clifford_n1_e6", name), &jobs, |b, &j| {
            b.iter(|| black_box(clifford_check(1, 6, 6, j)))
        });
        g.bench_with_input(BenchmarkId::new("heisenberg_n2_e6", name), &jobs, |b, &j| {
            b.iter(|| black_box(heisenberg_check(2, 6, j)))
        });
        let kind = CommutatorKind::X11 { q: 2 };
        g.bench_with_input(BenchmarkId::new("x11_n1_e6", name), &jobs, |b, &j| {
            b.iter(|| black_box(commutator_residuals(1, &kind, 6, default_window(1, &kind, 6), j).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("sigma_n1_e8", name), &jobs, |b, &j| {
            b.iter(|| {
                let s = Sigma::new(1, 8, j);
                black_box(alpha_intertwining(&s, 6, j))
            })
        });
    }
    g.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
