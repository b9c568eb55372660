use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sp1d::eigen::eigenvalues_below_with;
use sp1d::harness::{holder_norm, run_sweep_with_limit, DEFAULT_SWEEP};
use sp1d::limit::solve_limit;
use sp1d::poisson::{poisson_solve_measure_with, Measure};
use sp1d::{Exec, Grid, GridFunction, Problem, SystemParams};

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn sweep(c: &mut Criterion) {
    let p = SystemParams::default();
    let limit = solve_limit(&p).unwrap();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| run_sweep_with_limit(&p, &DEFAULT_SWEEP, limit.clone(), exec).unwrap())
        });
    }
    group.finish();
}

fn green_quadrature(c: &mut Criterion) {
    let mut group = c.benchmark_group("green_quadrature");
    for n in [1000, 4000] {
        let grid = Grid::uniform(1.0, n);
        let rho = GridFunction::from_fn(&grid, |x| 1.0 + (7.0 * x).sin().powi(2));
        let mu = Measure::from_density(rho);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| poisson_solve_measure_with(&grid, black_box(&mu), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn holder(c: &mut Criterion) {
    let mut group = c.benchmark_group("holder_metric");
    let n = 20_001;
    let dx = 1.0 / (n - 1) as f64;
    let u: Vec<f64> = (0..n)
        .map(|j| (j as f64 * dx * 11.0).sin() * (j as f64 * dx))
        .collect();
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| holder_norm(black_box(&u), dx, 0.5, exec))
        });
    }
    group.finish();
}

fn bisection(c: &mut Criterion) {
    let mut group = c.benchmark_group("bisection");
    let p = SystemParams {
        u0: 400.0,
        h: 0.05,
        points_per_well: 200,
        n_max: 1_000_000,
        ..SystemParams::default()
    };
    let problem = Problem::new(&p).unwrap();
    let t = problem.hamiltonian(None).unwrap();
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| eigenvalues_below_with(&t, -1.0, 1e-13, exec))
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, green_quadrature, holder, bisection);
criterion_main!(benches);
