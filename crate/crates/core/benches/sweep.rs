use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nls_expocol::experiments::{ExperimentConfig, Problem};
use nls_expocol::integrator::{integrate_with, IntegrateOptions, Method, Stepper};
use nls_expocol::parallel::{self, Execution};

fn sweep(cfg: &ExperimentConfig, exec: Execution) -> Vec<f64> {
    let grid = cfg.build_grid().unwrap();
    let u0 = cfg.initial.sample(&grid);
    let entries: Vec<(Method, f64)> = cfg
        .methods
        .iter()
        .flat_map(|&m| cfg.stepsizes.iter().map(move |&h| (m, h)))
        .collect();
    parallel::map(exec, &entries, |&(m, h)| {
        let stepper = Stepper::new(grid.clone(), cfg.lambda, cfg.stepper_config(m, h)).unwrap();
        integrate_with(
            &stepper,
            &u0,
            cfg.t_end,
            IntegrateOptions { stride: usize::MAX },
            &mut [],
        )
        .unwrap()
        .max_energy_error()
    })
}

fn bench_sweep(c: &mut Criterion) {
    let mut cfg = ExperimentConfig::preset(Problem::TestTwo).unwrap();
    cfg.methods = vec![Method::Ecm(2), Method::Ecm(3), Method::Strang, Method::Eavf];
    cfg.t_end = 0.5;

    let mut group = c.benchmark_group("test_two_sweep");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, &exec| b.iter(|| black_box(sweep(&cfg, exec))),
        );
    }
    group.finish();
}

fn bench_step(c: &mut Criterion) {
    let cfg = ExperimentConfig::preset(Problem::TestOne).unwrap();
    let grid = cfg.build_grid().unwrap();
    let u0 = cfg.initial.sample(&grid);
    let mut group = c.benchmark_group("single_step_n128");
    for m in [Method::Ecm(2), Method::Ecm(3), Method::Strang, Method::Eavf] {
        let stepper = Stepper::new(grid.clone(), cfg.lambda, cfg.stepper_config(m, 0.01)).unwrap();
        group.bench_function(m.to_string(), |b| {
            b.iter(|| black_box(stepper.step(&u0).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sweep, bench_step);
criterion_main!(benches);
