//! Shared fixtures for the benchmarks.

use grec_core::harness::{Context, ExperimentConfig};
use grec_core::mitigate::Curve;
use grec_core::qsim::NoiseModel;

pub fn benchmark_noise() -> NoiseModel {
    NoiseModel {
        p1: 0.002,
        p2: 0.01,
        coherent_eps: 0.02,
        ..NoiseModel::ideal()
    }
}

/// Exact and randomized curves restricted to the first training region.
pub fn training_set(n_r: usize) -> (Vec<Curve>, Curve) {
    let mut cfg = ExperimentConfig {
        noise: benchmark_noise(),
        ..Default::default()
    };
    cfg.plan.n_r = n_r;
    let ctx = Context::new(cfg).expect("valid config");
    let train = &ctx.grids.regions[0].train;
    let ens = ctx.ensemble(&ctx.config.plan()).expect("ensemble");
    let rand = ctx.randomized(&ens, train).expect("randomized curves");
    (rand, ctx.exact(train).expect("exact curve"))
}
