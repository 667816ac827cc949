//! Rayon backend against a single worker.
//!
//! With default features each kernel runs on the global pool and on a
//! one-thread pool. Built with `--no-default-features` the same kernels run
//! through the sequential fallback, under the `sequential` label.

use carnot_core::algebra::heisenberg;
use carnot_core::fields::SystemCoefficients;
use carnot_core::group::{ball_volume_estimate, GroupLaw};
use carnot_core::numerics::{assemble_and_solve, peetre_seminorm, Grid, GridField, SeminormParams, SolveOptions};
use carnot_core::regularity::harmonic_preset;
use carnot_core::BasisLabel;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use std::sync::Arc;

fn grid(n: usize) -> Arc<Grid> {
    Arc::new(Grid::new(Arc::new(GroupLaw::new(&heisenberg())), n, 1.0))
}

type Kernel = Box<dyn Fn() + Send + Sync>;

fn kernels() -> Vec<(&'static str, Kernel)> {
    let h = heisenberg();
    let g = grid(16);
    let bc = GridField::from_polys(g.clone(), &[harmonic_preset(&h)]);
    let zero = GridField::zeros(g.clone(), 1);
    let a = SystemCoefficients::identity(1, 2);
    let field = GridField::from_fn(grid(16), |p| (p[0] * p[1]).sin() + p[2] * p[2]);
    let params = SeminormParams { direction: BasisLabel::new(2, 1), alpha: 0.5, epsilon0: 0.25, samples: 4 };
    vec![
        ("ball_volume_200k", Box::new(move || {
            black_box(ball_volume_estimate(&h, 1.0, 200_000, 7));
        })),
        ("solve_n16", Box::new(move || {
            black_box(assemble_and_solve(&a, &bc, &zero, &[], &SolveOptions::default()).unwrap());
        })),
        ("seminorm_n16", Box::new(move || {
            black_box(peetre_seminorm(&field, &params));
        })),
    ]
}

fn bench(c: &mut Criterion) {
    let mut group = c.benchmark_group("backend");
    group.sample_size(10);
    for (name, k) in kernels() {
        #[cfg(feature = "parallel")]
        {
            let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            group.bench_function(BenchmarkId::new("rayon-global", name), |b| b.iter(&k));
            group.bench_function(BenchmarkId::new("rayon-1-thread", name), |b| b.iter(|| one.install(|| k())));
        }
        #[cfg(not(feature = "parallel"))]
        group.bench_function(BenchmarkId::new("sequential", name), |b| b.iter(&k));
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
