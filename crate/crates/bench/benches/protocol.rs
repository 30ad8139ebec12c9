use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use omcrep_bench::default_params;
use omcrep_core::evolution::integrate_oracle_grid;
use omcrep_core::protocol::linspace;
use omcrep_core::{
    build_effective_hamiltonian, build_s_matrix, run_protocol, subspace_generator, AmplitudeVector,
    Propagator, SubspaceBasis11,
};

fn bench_generator(c: &mut Criterion) {
    let params = default_params();
    c.bench_function("build_s_matrix", |b| {
        b.iter(|| build_s_matrix(black_box(&params)).unwrap())
    });

    let (registry, basis) = SubspaceBasis11::standard().unwrap();
    c.bench_function("build_effective_hamiltonian_6561", |b| {
        b.iter(|| {
            build_effective_hamiltonian(black_box(&params), registry, basis.measured_pair())
                .unwrap()
        })
    });

    let h = build_effective_hamiltonian(&params, registry, basis.measured_pair()).unwrap();
    c.bench_function("subspace_generator", |b| {
        b.iter(|| subspace_generator(black_box(&h), &basis).unwrap())
    });
}

fn bench_propagation(c: &mut Criterion) {
    let params = default_params();
    let s = build_s_matrix(&params).unwrap();
    let x0 = AmplitudeVector::stage1_initial();
    let propagator = Propagator::new(&s);

    c.bench_function("propagate_single_point", |b| {
        b.iter(|| propagator.apply(black_box(20.0), &x0))
    });

    let grid = linspace(0.0, 20.0, 201);
    c.bench_function("propagate_grid_201", |b| {
        b.iter(|| {
            for &t in &grid {
                black_box(propagator.apply(t, &x0));
            }
        })
    });

    c.bench_function("runge_kutta_oracle_to_20", |b| {
        b.iter(|| integrate_oracle_grid(&s, &x0, black_box(&[20.0]), 1e-10).unwrap())
    });
}

fn bench_protocol(c: &mut Criterion) {
    let params = default_params();
    let tau = linspace(0.0, 20.0, 201);
    c.bench_function("run_protocol_201", |b| {
        b.iter(|| run_protocol(black_box(&params), 0.8, &tau).unwrap())
    });
}

criterion_group!(benches, bench_generator, bench_propagation, bench_protocol);
criterion_main!(benches);
