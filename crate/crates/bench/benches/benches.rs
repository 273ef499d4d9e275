//! Criterion benchmarks for the hot paths: exact transport, the 1-D closed
//! form, simplex projection, and a small end-to-end solve.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::prelude::*;
use wbary_bench::{random_discrete, seeded};
use wbary_core::measures::BoxDomain;
use wbary_core::solver::{project_simplex, solve};
use wbary_core::transport::{w2_1d, w2_exact};
use wbary_core::{BarycenterProblem, Penalty, SolverConfig};

fn bench_w2_exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("w2_exact");
    for &m in &[10usize, 30, 60] {
        let mut rng = seeded(1);
        let mu = random_discrete(&mut rng, 2, m);
        let nu = random_discrete(&mut rng, 2, m);
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| {
            b.iter(|| w2_exact(&mu, &nu).unwrap().cost)
        });
    }
    group.finish();
}

fn bench_w2_1d(c: &mut Criterion) {
    let mut rng = seeded(2);
    let mu = random_discrete(&mut rng, 1, 200);
    let nu = random_discrete(&mut rng, 1, 200);
    c.bench_function("w2_1d_200_atoms", |b| b.iter(|| w2_1d(&mu, &nu).unwrap()));
}

fn bench_project_simplex(c: &mut Criterion) {
    let mut rng = seeded(3);
    let raw: Vec<f64> = (0..1024).map(|_| rng.gen::<f64>()).collect();
    c.bench_function("project_simplex_1024", |b| {
        b.iter(|| project_simplex(&raw, 1e-6, 1.0 / 1024.0).unwrap())
    });
}

fn bench_solve_small(c: &mut Criterion) {
    let mut rng = seeded(4);
    let measures: Vec<_> = (0..4).map(|_| random_discrete(&mut rng, 1, 5)).collect();
    let domain = BoxDomain::unit(1);
    let penalty = Penalty::entropy(1e-6).unwrap();
    let problem = BarycenterProblem::new(measures, 0.1, penalty, domain.clone(), vec![32]).unwrap();
    let mut config = SolverConfig::for_domain(&domain);
    config.max_iters = 200;
    config.tol = 1e-5;
    c.bench_function("solve_n4_grid32", |b| b.iter(|| solve(&problem, &config).unwrap()));
}

criterion_group!(
    benches,
    bench_w2_exact,
    bench_w2_1d,
    bench_project_simplex,
    bench_solve_small
);
criterion_main!(benches);
