use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use normsol::scalar::riemannian_gradient;
use normsol::system::system_gradient;
use normsol::{
    energy_i, flow_integrate, fiber_maximize, ground_state_omega, h1_precondition, mountain_pass_single,
    newton_polish, AugmentedPoint, FlowConfig, Functional, MinimaxConfig, ScalarProblem,
};
use normsol_bench::Fixture;
use std::hint::black_box;

fn grid_kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("grid");
    for n in [1024, 4096] {
        let f = Fixture::cubic(n);
        let u = f.profile();
        group.bench_with_input(BenchmarkId::new("energy", n), &u, |b, u| b.iter(|| energy_i(black_box(u), &f.spec)));
        group.bench_with_input(BenchmarkId::new("dilate", n), &u, |b, u| b.iter(|| black_box(u).dilated(1.3)));
        group.bench_with_input(BenchmarkId::new("helmholtz_solve", n), &u, |b, u| {
            b.iter(|| h1_precondition(black_box(u), 1.0).unwrap())
        });
    }
    group.finish();
}

fn solver_kernels(c: &mut Criterion) {
    let f = Fixture::cubic(4096);
    let u = f.profile();
    let mut group = c.benchmark_group("solvers");
    group.bench_function("ground_state_shooting", |b| b.iter(|| ground_state_omega(black_box(&f.grid)).unwrap()));
    group.bench_function("fiber_maximize", |b| b.iter(|| fiber_maximize(black_box(&u), &f.spec).unwrap()));
    group.bench_function("scalar_gradient", |b| b.iter(|| riemannian_gradient(black_box(&u), &f.spec, &f.constraint).unwrap()));
    let s = f.system_state();
    group.bench_function("system_gradient", |b| b.iter(|| system_gradient(black_box(&s)).unwrap()));
    let problem = ScalarProblem { spec: f.spec.clone(), constraint: f.constraint };
    let start = AugmentedPoint::from_scalar(u.clone());
    let (j0, _) = problem.augmented(0.0, &start.components);
    let mut config = FlowConfig::for_level(j0);
    config.eps_bar = 4.0 * j0.abs();
    group.bench_function("flow_10_steps", |b| b.iter(|| flow_integrate(&problem, black_box(&start), &config, &[], 10).unwrap()));
    let near = normsol::retract(&f.gs.omega.dilated(1.02), f.constraint.m);
    group.bench_function("newton_polish_cubic", |b| {
        b.iter(|| newton_polish(&f.spec, black_box(&[near.clone()]), &[f.constraint.m], 1e-10, 20).unwrap())
    });
    group.finish();

    let mut group = c.benchmark_group("minimax");
    group.sample_size(10);
    group.bench_function("mountain_pass_cubic", |b| {
        b.iter(|| mountain_pass_single(&f.grid, &f.constraint, &f.spec, &MinimaxConfig::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, grid_kernels, solver_kernels);
criterion_main!(benches);
