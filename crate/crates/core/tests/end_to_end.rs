use grec_core::harness::{
    execute, run_pipeline, Context, ExperimentConfig, OutputFormat, RmseTable, Stage, MANIFEST_FILE,
};
use grec_core::ising::{exact_magnetization, IsingCircuitFamily};
use grec_core::mitigate::{baseline_fit, BaselineMode, Curve, CurveLabel};
use grec_core::qsim::{CircuitFamily, NoiseModel};
use grec_core::randomize::{generate_ensemble, realize_member, RandomizationPlan};

fn benchmark_noise() -> NoiseModel {
    NoiseModel {
        p1: 0.002,
        p2: 0.01,
        coherent_eps: 0.02,
        ..NoiseModel::ideal()
    }
}

#[test]
fn small_delta_continuity() {
    let noise = benchmark_noise();
    let grid: Vec<f64> = (0..11).map(|i| 1.0 + 0.25 * i as f64).collect();
    let family = IsingCircuitFamily;
    let base_curve: Vec<f64> = grid
        .iter()
        .map(|&l| grec_core::qsim::simulate_mean_z(&family.build(l).unwrap(), &noise).unwrap())
        .collect();
    let base = family.build(grid[0]).unwrap();
    let mut prev = f64::INFINITY;
    for delta in [0.2, 0.1, 0.05, 0.0] {
        let plan = RandomizationPlan {
            delta,
            n_r: 4,
            ..Default::default()
        };
        let members = generate_ensemble(&base, &plan).unwrap();
        let dev = members
            .iter()
            .flat_map(|m| {
                grid.iter().zip(&base_curve).map(move |(&l, b)| {
                    let c = realize_member(&family, m, l).unwrap();
                    (grec_core::qsim::simulate_mean_z(&c, &noise).unwrap() - b).abs()
                })
            })
            .fold(0.0, f64::max);
        assert!(dev <= prev, "delta {delta}: {dev} > {prev}");
        prev = dev;
    }
    assert_eq!(prev, 0.0);
}

#[test]
fn global_depolarizing_is_affine() {
    let ctx = Context::new(ExperimentConfig {
        noise: NoiseModel::global_only(0.15),
        ..Default::default()
    })
    .unwrap();
    let r1 = &ctx.grids.regions[0];
    let fit = baseline_fit(
        &ctx.noisy(&r1.train).unwrap(),
        &ctx.exact(&r1.train).unwrap(),
        BaselineMode::Affine,
    )
    .unwrap();
    // Depolarizing shrinks every Pauli expectation by (1 - p).
    assert!((fit.eta1 - 1.0 / 0.85).abs() < 1e-9);
    assert!(fit.eta0.abs() < 1e-9);
    let far: Vec<f64> = (0..11).map(|i| 2.5 + 0.1 * i as f64).collect();
    for pts in [&r1.validation, &far] {
        let got = fit.apply(&ctx.noisy(pts).unwrap()).unwrap();
        assert!(got.rmse(&ctx.exact(pts).unwrap()).unwrap() < 1e-6);
    }
}

#[test]
fn rmse_table_recomputable_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        noise: benchmark_noise(),
        ..Default::default()
    };
    execute(Stage::Run, &cfg, dir.path(), OutputFormat::Csv, None).unwrap();
    let read = |n: &str| Curve::from_csv(&std::fs::read_to_string(dir.path().join(n)).unwrap()).unwrap();
    let table: RmseTable = serde_json::from_str(&std::fs::read_to_string(dir.path().join("rmse.json")).unwrap()).unwrap();
    let grids = cfg.grids();
    let exact = read("exact.csv");
    assert_eq!(exact.label(), CurveLabel::Exact);
    for row in &table.rows {
        let file = match row.method.as_str() {
            "raw" => "noisy.csv".to_string(),
            "zne" => "zne.csv".to_string(),
            m => format!("{m}_t{}.csv", row.region),
        };
        let curve = read(&file);
        let g = &grids.regions[row.region - 1];
        for (pts, want) in [(&g.train, row.train), (&g.validation, row.validation), (&grids.full, row.full)] {
            let got = curve.restrict(pts).unwrap().rmse(&exact.restrict(pts).unwrap()).unwrap();
            assert!((got - want).abs() <= 1e-12, "{} {}: {got} vs {want}", row.method, row.region);
        }
    }
}

#[test]
fn identical_config_identical_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig {
        noise: benchmark_noise(),
        shots: Some(2000),
        ..Default::default()
    };
    cfg.plan.n_r = 3;
    let a = execute(Stage::Grec, &cfg, &dir.path().join("a"), OutputFormat::Json, None).unwrap();
    let b = execute(Stage::Grec, &cfg, &dir.path().join("b"), OutputFormat::Json, None).unwrap();
    assert_eq!(a, b);
    cfg.master_seed = Some(7);
    let c = execute(Stage::Grec, &cfg, &dir.path().join("c"), OutputFormat::Json, None).unwrap();
    assert_ne!(a.artifacts, c.artifacts);
    assert!(dir.path().join("c").join(MANIFEST_FILE).exists());
}

#[test]
fn benchmark_grec_beats_raw_on_validation() {
    let ctx = Context::new(ExperimentConfig {
        noise: benchmark_noise(),
        ..Default::default()
    })
    .unwrap();
    let out = run_pipeline(&ctx).unwrap();
    for region in [1, 2] {
        let grec = out.rmse.get("grec", region).unwrap().validation;
        let raw = out.rmse.get("raw", region).unwrap().validation;
        assert!(grec <= raw, "V{region}: {grec} > {raw}");
    }
    for l in [1.0, 2.0, 3.0] {
        let i = out.exact.lambdas().iter().position(|x| (x - l).abs() < 1e-12).unwrap();
        assert_eq!(out.exact.values()[i], exact_magnetization(l).unwrap());
    }
}
