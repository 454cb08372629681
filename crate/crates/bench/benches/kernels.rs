use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dgmbb_bench::Fixture;
use dgmbb_core::solvers::{consensus_sweep, run, step, StepSizes};
use dgmbb_core::theory::{build_g_alpha, certify, select_c, spectral_radius_3x3};
use dgmbb_core::{Method, Objective, ProblemConstants, SolverConfig, SolverState};
use nalgebra::DVector;

fn consensus(c: &mut Criterion) {
    let fx = Fixture::reference(0.1, 1);
    let v = fx.spread_stack();
    let mut group = c.benchmark_group("consensus_sweep");
    for rounds in [1usize, 4, 8] {
        group.bench_with_input(BenchmarkId::from_parameter(rounds), &rounds, |b, &r| {
            let mut comms = 0;
            b.iter(|| consensus_sweep(black_box(v.clone()), &fx.mixing, r, &mut comms));
        });
    }
    group.finish();
}

fn iteration(c: &mut Criterion) {
    let fx = Fixture::reference(0.1, 1);
    let n = fx.instance.agents();
    let mut group = c.benchmark_group("iteration");
    for method in Method::ALL {
        let config = SolverConfig::new(method, StepSizes::Uniform(0.5)).with_rounds(4);
        group.bench_function(method.name(), |b| {
            b.iter_batched(
                || {
                    let mut s = SolverState::new(&fx.instance, fx.x0.clone(), DVector::from_element(n, 0.5), true)
                        .expect("state");
                    // Warm up past the first iteration's special cases.
                    step(&config, &mut s, &fx.instance, &fx.mixing);
                    s
                },
                |mut s| step(&config, &mut s, &fx.instance, &fx.mixing),
                criterion::BatchSize::LargeInput,
            );
        });
    }
    group.finish();
}

fn full_run(c: &mut Criterion) {
    let fx = Fixture::reference(0.1, 1);
    let config = SolverConfig::new(Method::DgmBbC, StepSizes::Uniform(1.4)).with_rounds(4).with_stop(500, 1e-8);
    let mut group = c.benchmark_group("run");
    group.sample_size(10);
    group.bench_function("dgm-bb-c_R4_to_1e-8", |b| {
        b.iter(|| run(&config, &fx.instance, &fx.weights, fx.instance.optimum()).expect("run"));
    });
    group.finish();
}

fn theory(c: &mut Criterion) {
    let k = ProblemConstants::new(1.0, 0.5, 200).unwrap();
    let g = build_g_alpha(0.6, 7, &k, 2.0).unwrap();
    c.bench_function("spectral_radius_3x3", |b| b.iter(|| spectral_radius_3x3(black_box(&g))));
    c.bench_function("select_c", |b| b.iter(|| select_c(black_box(&k), 0.6)));
    c.bench_function("certify", |b| b.iter(|| certify(black_box(&k), 0.6, 7, 2.0)));
}

criterion_group!(benches, consensus, iteration, full_run, theory);
criterion_main!(benches);
