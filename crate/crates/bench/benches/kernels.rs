use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use grec_bench::{benchmark_noise, training_set};
use grec_core::chebx::{cheb_fit, equispaced};
use grec_core::ising::IsingCircuitFamily;
use grec_core::mitigate::{grec_fit, GrecOptions};
use grec_core::qsim::{apply_circuit, CircuitFamily, DensityMatrix};

fn bench_apply_circuit(c: &mut Criterion) {
    let circuit = IsingCircuitFamily.build(2.0).unwrap();
    let rho0 = DensityMatrix::zero_state(4).unwrap();
    let noise = benchmark_noise();
    c.bench_function("apply_circuit/n4", |b| {
        b.iter(|| apply_circuit(black_box(&rho0), black_box(&circuit), &noise).unwrap())
    });
}

fn bench_grec_fit(c: &mut Criterion) {
    let mut g = c.benchmark_group("grec_fit");
    for n_r in [3, 9, 20] {
        let (rand, exact) = training_set(n_r);
        g.bench_with_input(BenchmarkId::from_parameter(n_r), &n_r, |b, _| {
            b.iter(|| grec_fit(black_box(&rand), black_box(&exact), GrecOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn bench_cheb_fit(c: &mut Criterion) {
    let mut g = c.benchmark_group("cheb_fit");
    for n in [4usize, 8, 16] {
        let xs = equispaced(4 * n * n);
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 / (3.0 - x)).collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| cheb_fit(black_box(&xs), black_box(&ys), n, true).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_apply_circuit, bench_grec_fit, bench_cheb_fit);
criterion_main!(benches);
