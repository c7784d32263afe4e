//! End-to-end experiment: reference, noisy and randomized curves, the three
//! mitigators and an RMSE summary.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Grids, RegionGrid};
use crate::error::{Error, Result, ResultExt};
use crate::ising::{exact_magnetization, verify_ground_state_circuit, CircuitVerification, IsingCircuitFamily};
use crate::mitigate::{
    baseline_fit, grec_apply, grec_fit, sweep_hyperparameters, zne_run, BaselineFit, BaselineMode, Curve, CurveLabel,
    GrecFit, GrecOptions, SweepContext, SweepReport, ZneResult,
};
use crate::qsim::{CircuitFamily, Estimator};
use crate::randomize::{generate_ensemble, realize_member, EnsembleManifest, RandomizationPlan};

/// Noiseless circuit values must match the closed form to this tolerance.
pub const VERIFY_TOL: f64 = 1e-8;

const NOISY_STREAM: u64 = 0x6e6f;
const MEMBER_STREAM: u64 = 0x6d65;

/// Everything the stages share.
pub struct Context {
    pub config: ExperimentConfig,
    pub grids: Grids,
    pub estimator: Estimator,
    family: IsingCircuitFamily,
}

impl Context {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let grids = config.grids();
        let estimator = Estimator {
            noise: config.noise,
            shots: config.shots,
            seed: config.shot_seed(),
        };
        Ok(Context {
            config,
            grids,
            estimator,
            family: IsingCircuitFamily,
        })
    }

    pub fn family(&self) -> &dyn CircuitFamily {
        &self.family
    }

    /// Fails unless the noiseless circuit reproduces the closed form on the
    /// full grid.
    pub fn verify_circuit(&self) -> Result<CircuitVerification> {
        let v = verify_ground_state_circuit(&self.grids.full, VERIFY_TOL)?;
        if !v.verified {
            return Err(Error::Unsupported(format!(
                "ground-state circuit is unverified: max error {:e} > {:e}",
                v.max_abs_error, v.tolerance
            )));
        }
        Ok(v)
    }

    pub fn exact(&self, lambdas: &[f64]) -> Result<Curve> {
        Curve::from_fn(CurveLabel::Exact, lambdas, exact_magnetization)
    }

    pub fn noisy(&self, lambdas: &[f64]) -> Result<Curve> {
        let points: Vec<(f64, Option<f64>)> = lambdas
            .par_iter()
            .map(|&l| {
                let c = self.family.build(l)?;
                self.estimator
                    .estimate(&c, &[NOISY_STREAM, l.to_bits()])
                    .context(|| format!("noisy curve at lambda = {l}"))
            })
            .collect::<Result<_>>()?;
        curve_from_points(CurveLabel::Noisy, lambdas, points)
    }

    pub fn ensemble(&self, plan: &RandomizationPlan) -> Result<EnsembleManifest> {
        let base = self.family.build(self.grids.full[0])?;
        Ok(EnsembleManifest {
            plan: *plan,
            members: generate_ensemble(&base, plan)?,
        })
    }

    pub fn randomized(&self, ensemble: &EnsembleManifest, lambdas: &[f64]) -> Result<Vec<Curve>> {
        let jobs: Vec<(usize, f64)> = (0..ensemble.members.len())
            .flat_map(|m| lambdas.iter().map(move |&l| (m, l)))
            .collect();
        let mut points: Vec<(f64, Option<f64>)> = jobs
            .par_iter()
            .map(|&(m, l)| {
                let member = &ensemble.members[m];
                let c = realize_member(&self.family, member, l)?;
                self.estimator
                    .estimate(&c, &[MEMBER_STREAM, member.index as u64, l.to_bits()])
                    .context(|| format!("member {} at lambda = {l}", member.index))
            })
            .collect::<Result<_>>()?;
        let mut curves = Vec::with_capacity(ensemble.members.len());
        for member in ensemble.members.iter().rev() {
            let tail = points.split_off(points.len() - lambdas.len());
            curves.push(curve_from_points(CurveLabel::Randomized(member.index), lambdas, tail)?);
        }
        curves.reverse();
        Ok(curves)
    }

    pub fn zne(&self, lambdas: &[f64]) -> Result<ZneResult> {
        zne_run(&self.family, &self.estimator, &self.config.zne(), lambdas).context(|| "ZNE stage".to_string())
    }
}

fn curve_from_points(label: CurveLabel, lambdas: &[f64], points: Vec<(f64, Option<f64>)>) -> Result<Curve> {
    let values = points.iter().map(|p| p.0).collect();
    let stderrs = points.iter().map(|p| p.1).collect::<Option<Vec<f64>>>();
    Curve::new(label, lambdas.to_vec(), values, stderrs)
}

impl SweepContext for Context {
    fn exact(&self, lambdas: &[f64]) -> Result<Curve> {
        Context::exact(self, lambdas)
    }

    fn randomized(&self, n_r: usize, delta: f64, lambdas: &[f64]) -> Result<Vec<Curve>> {
        let plan = RandomizationPlan {
            n_r,
            delta,
            ..self.config.plan()
        };
        let ensemble = self.ensemble(&plan)?;
        Context::randomized(self, &ensemble, lambdas)
    }
}

/// Fits trained on one region's training grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionFits {
    pub region: usize,
    pub grec: GrecFit,
    pub baseline: BaselineFit,
}

/// Trains GREC and the baseline on `region.train` and scores them on
/// `region.validation`. Only the restricted curves reach the fitters.
pub fn fit_region(
    region: &RegionGrid,
    exact: &Curve,
    noisy: &Curve,
    randomized: &[Curve],
    options: GrecOptions,
) -> Result<RegionFits> {
    let on = |c: &Curve, pts: &[f64]| c.restrict(pts);
    let exact_t = on(exact, &region.train)?;
    let exact_v = on(exact, &region.validation)?;
    let rand_t = randomized.iter().map(|c| on(c, &region.train)).collect::<Result<Vec<_>>>()?;
    let grec = grec_fit(&rand_t, &exact_t, options).context(|| format!("GREC fit on T{}", region.index))?;
    let baseline = baseline_fit(&on(noisy, &region.train)?, &exact_t, BaselineMode::Affine)
        .context(|| format!("baseline fit on T{}", region.index))?;

    let rand_v = randomized.iter().map(|c| on(c, &region.validation)).collect::<Result<Vec<_>>>()?;
    Ok(RegionFits {
        region: region.index,
        grec: grec.with_validation(&rand_v, &exact_v)?,
        baseline: baseline.with_validation(&on(noisy, &region.validation)?, &exact_v)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub method: String,
    pub region: usize,
    pub train: f64,
    pub validation: f64,
    pub full: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseTable {
    pub rows: Vec<RmseRow>,
}

impl RmseTable {
    pub fn get(&self, method: &str, region: usize) -> Option<&RmseRow> {
        self.rows.iter().find(|r| r.method == method && r.region == region)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,region,train,validation,full\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.method, r.region, r.train, r.validation, r.full));
        }
        out
    }
}

/// RMSE of `curve` against `exact` on the training, validation and full
/// grids of `region`.
pub fn rmse_row(method: &str, region: &RegionGrid, full: &[f64], curve: &Curve, exact: &Curve) -> Result<RmseRow> {
    let score = |pts: &[f64]| curve.restrict(pts)?.rmse(&exact.restrict(pts)?);
    Ok(RmseRow {
        method: method.to_string(),
        region: region.index,
        train: score(&region.train)?,
        validation: score(&region.validation)?,
        full: score(full)?,
    })
}

/// In-memory results of [`run_pipeline`]; every curve lives on the union grid.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub verification: CircuitVerification,
    pub grids: Grids,
    pub exact: Curve,
    pub noisy: Curve,
    pub ensemble: EnsembleManifest,
    pub randomized: Vec<Curve>,
    pub fits: Vec<RegionFits>,
    /// GREC-mitigated curve per region, in region order.
    pub grec: Vec<Curve>,
    pub baseline: Vec<Curve>,
    pub zne: ZneResult,
    pub rmse: RmseTable,
}

pub fn run_pipeline(ctx: &Context) -> Result<PipelineOutput> {
    let verification = ctx.verify_circuit()?;
    let grid = &ctx.grids.union;
    let exact = ctx.exact(grid)?;
    let noisy = ctx.noisy(grid)?;
    let ensemble = ctx.ensemble(&ctx.config.plan())?;
    let randomized = ctx.randomized(&ensemble, grid)?;
    let zne = ctx.zne(grid)?;

    let mut fits = Vec::new();
    let mut grec = Vec::new();
    let mut baseline = Vec::new();
    let mut rows = Vec::new();
    for region in &ctx.grids.regions {
        let f = fit_region(region, &exact, &noisy, &randomized, ctx.config.fit)?;
        let g = grec_apply(&f.grec, &randomized)?;
        let b = f.baseline.apply(&noisy)?;
        for (name, curve) in [("raw", &noisy), ("baseline", &b), ("grec", &g), ("zne", &zne.curve)] {
            rows.push(rmse_row(name, region, &ctx.grids.full, curve, &exact)?);
        }
        fits.push(f);
        grec.push(g);
        baseline.push(b);
    }
    Ok(PipelineOutput {
        verification,
        grids: ctx.grids.clone(),
        exact,
        noisy,
        ensemble,
        randomized,
        fits,
        grec,
        baseline,
        zne,
        rmse: RmseTable { rows },
    })
}

/// Sweep over the configured candidates, once per region.
pub fn run_sweep(ctx: &Context) -> Result<Vec<SweepReport>> {
    ctx.grids
        .regions
        .iter()
        .map(|r| {
            sweep_hyperparameters(
                &ctx.config.sweep.n_r,
                &ctx.config.sweep.delta,
                &r.train,
                &r.validation,
                ctx,
                ctx.config.fit,
            )
            .context(|| format!("sweep on region {}", r.index))
        })
        .collect()
}

/// Runs `f` on a worker pool sized by `GREC_LAB_THREADS` when set.
pub fn with_pool<T: Send>(f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let threads = match std::env::var("GREC_LAB_THREADS") {
        Ok(v) => Some(
            v.trim()
                .parse()
                .ok()
                .filter(|&n: &usize| n > 0)
                .ok_or_else(|| Error::Config(format!("GREC_LAB_THREADS = {v:?} is not a positive integer")))?,
        ),
        Err(_) => None,
    };
    with_threads(threads, f)
}

/// Runs `f` on a pool of `threads` workers, or rayon's default.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::NoiseModel;

    fn small(noise: NoiseModel) -> Context {
        let mut cfg = ExperimentConfig {
            noise,
            ..Default::default()
        };
        cfg.plan.n_r = 3;
        Context::new(cfg).unwrap()
    }

    #[test]
    fn zero_noise_everything_exact() {
        // Three members cannot span the exact curve; nine do.
        let ctx = Context::new(ExperimentConfig {
            noise: NoiseModel::ideal(),
            ..Default::default()
        })
        .unwrap();
        let out = run_pipeline(&ctx).unwrap();
        for c in out.grec.iter().chain(&out.baseline).chain([&out.zne.curve, &out.noisy]) {
            assert!(c.rmse(&out.exact).unwrap() < 1e-8, "{:?}", c.label());
        }
        assert!(out.rmse.rows.iter().all(|r| r.full < 1e-8));
        assert!(out.fits.iter().all(|f| f.grec.constraint_residual < 1e-10));
    }

    #[test]
    fn fits_ignore_validation_points() {
        let ctx = small(NoiseModel {
            p1: 0.01,
            p2: 0.02,
            ..NoiseModel::ideal()
        });
        let out = run_pipeline(&ctx).unwrap();
        // Corrupt every value outside T1; the T1 fits must not move.
        let region = &ctx.grids.regions[0];
        let poison = |c: &Curve| {
            let values = c
                .lambdas()
                .iter()
                .zip(c.values())
                .map(|(l, v)| {
                    if region.train.iter().any(|t| (t - l).abs() < 1e-9) {
                        *v
                    } else {
                        v + 1e3
                    }
                })
                .collect();
            Curve::new(c.label(), c.lambdas().to_vec(), values, None).unwrap()
        };
        let rand: Vec<Curve> = out.randomized.iter().map(poison).collect();
        let f = fit_region(region, &out.exact, &poison(&out.noisy), &rand, GrecOptions::default()).unwrap();
        assert_eq!(f.grec.etas, out.fits[0].grec.etas);
        assert_eq!(f.grec.eta0, out.fits[0].grec.eta0);
        assert_eq!(f.baseline.eta1, out.fits[0].baseline.eta1);
        assert_eq!(f.grec.train_rmse, out.fits[0].grec.train_rmse);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let ctx = small(NoiseModel {
            p1: 0.005,
            coherent_eps: 0.02,
            ..NoiseModel::ideal()
        });
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| run_pipeline(&ctx)).unwrap();
        let b = run_pipeline(&ctx).unwrap();
        assert_eq!(a.randomized, b.randomized);
        assert_eq!(a.rmse, b.rmse);
        assert_eq!(a.zne.curve, b.zne.curve);
    }

    #[test]
    fn shot_mode_carries_stderrs() {
        let mut ctx = small(NoiseModel {
            p1: 0.005,
            ..NoiseModel::ideal()
        });
        ctx.estimator.shots = Some(500);
        let noisy = ctx.noisy(&ctx.grids.full).unwrap();
        assert!(noisy.stderrs().is_some());
        // The same lambda draws the same samples regardless of the grid.
        let one = ctx.noisy(&[ctx.grids.full[3]]).unwrap();
        assert_eq!(one.values()[0], noisy.values()[3]);
    }

    #[test]
    fn sweep_runs_per_region() {
        let mut cfg = ExperimentConfig::default();
        cfg.noise.p1 = 0.002;
        cfg.sweep.n_r = vec![2, 3];
        cfg.sweep.delta = vec![0.1];
        let ctx = Context::new(cfg).unwrap();
        let reps = run_sweep(&ctx).unwrap();
        assert_eq!(reps.len(), 2);
        assert!(reps.iter().all(|r| r.rows.len() == 2));
    }
}
