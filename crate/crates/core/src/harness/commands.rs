//! Stage dispatch: compute a stage, write its artifacts and a manifest.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::artifacts::{ArtifactRecord, ArtifactStore};
use super::config::ExperimentConfig;
use super::manifest::{check_replay, RunManifest, MANIFEST_FILE};
use super::pipeline::{fit_region, run_pipeline, run_sweep, with_pool, with_threads, Context, RegionFits};
use super::svg::{self, Marker, Series};
use crate::chebx::stability_experiment;
use crate::error::{Error, Result, ResultExt};
use crate::mitigate::{grec_apply, Curve, CurveLabel};
use crate::randomize::EnsembleManifest;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// A replayable unit of work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Oracle,
    Simulate,
    Ensemble,
    Grec,
    Baseline,
    Zne,
    Sweep,
    Stability,
    Run,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRun {
    /// Everything written except the manifest.
    pub artifacts: Vec<ArtifactRecord>,
    pub ensemble: Option<EnsembleManifest>,
}

struct Writer {
    store: ArtifactStore,
    format: OutputFormat,
}

impl Writer {
    fn curve(&mut self, name: &str, c: &Curve) -> Result<()> {
        let file = format!("{name}.{}", self.format.extension());
        match self.format {
            OutputFormat::Csv => self.store.write(&file, c.to_csv().as_bytes()),
            OutputFormat::Json => self.store.write_json(&file, c),
        }
    }

    fn randomized(&mut self, curves: &[Curve]) -> Result<()> {
        for c in curves {
            let CurveLabel::Randomized(r) = c.label() else {
                return Err(Error::InvalidParameter(format!("{} is not a randomized curve", c.label())));
            };
            self.curve(&format!("randomized_{r:02}"), c)?;
        }
        Ok(())
    }

    fn grec_fits(&mut self, ctx: &Context, fits: &[RegionFits]) -> Result<()> {
        for f in fits {
            let g = &f.grec;
            self.store.write_json(
                &format!("fit_grec_t{}.json", f.region),
                &json!({
                    "method": "grec",
                    "region": f.region,
                    "eta0": g.eta0,
                    "etas": g.etas,
                    "train_rmse": g.train_rmse,
                    "val_rmse": g.val_rmse,
                    "constraint_residual": g.constraint_residual,
                    "box_violations": g.box_violations,
                    "config": { "fit": ctx.config.fit, "plan": ctx.config.plan() },
                }),
            )?;
        }
        Ok(())
    }

    fn baseline_fits(&mut self, fits: &[RegionFits]) -> Result<()> {
        for f in fits {
            let b = &f.baseline;
            self.store.write_json(
                &format!("fit_baseline_t{}.json", f.region),
                &json!({
                    "method": "baseline",
                    "region": f.region,
                    "eta0": b.eta0,
                    "etas": [b.eta1],
                    "train_rmse": b.train_rmse,
                    "val_rmse": b.val_rmse,
                    "config": { "mode": b.mode },
                }),
            )?;
        }
        Ok(())
    }
}

/// Computes `stage` for `config` and writes its artifacts plus a manifest
/// under `out`. Nothing is left behind on failure. With `replay`, every
/// recorded artifact hash must match before anything is kept, and the
/// original manifest bytes are written back unchanged.
pub fn execute(
    stage: Stage,
    config: &ExperimentConfig,
    out: &Path,
    format: OutputFormat,
    replay: Option<(&RunManifest, &[u8])>,
) -> Result<StageRun> {
    let ctx = Context::new(config.clone())?;
    let mut w = Writer {
        store: ArtifactStore::create(out)?,
        format,
    };
    let compute = || compute_stage(stage, &ctx, &mut w);
    let ensemble = if replay.is_some() {
        with_threads(Some(1), compute)
    } else {
        with_pool(compute)
    }
    .context(|| format!("stage {stage}"))?;

    let artifacts = w.store.records().to_vec();
    match replay {
        Some((manifest, original)) => {
            check_replay(manifest, &artifacts, ensemble.as_ref())?;
            w.store.write(MANIFEST_FILE, original)?;
        }
        None => {
            let manifest = RunManifest::new(stage, format, config, ensemble.clone(), artifacts.clone());
            w.store.write_json(MANIFEST_FILE, &manifest)?;
        }
    }
    w.store.commit();
    Ok(StageRun { artifacts, ensemble })
}

fn compute_stage(stage: Stage, ctx: &Context, w: &mut Writer) -> Result<Option<EnsembleManifest>> {
    let full = &ctx.grids.full;
    let union = &ctx.grids.union;
    match stage {
        Stage::Oracle => {
            w.curve("exact", &ctx.exact(full)?)?;
            Ok(None)
        }
        Stage::Simulate => {
            ctx.verify_circuit()?;
            w.curve("noisy", &ctx.noisy(full)?)?;
            Ok(None)
        }
        Stage::Ensemble => {
            ctx.verify_circuit()?;
            let ens = ctx.ensemble(&ctx.config.plan())?;
            w.store.write_json("ensemble.json", &ens)?;
            w.randomized(&ctx.randomized(&ens, full)?)?;
            Ok(Some(ens))
        }
        Stage::Grec | Stage::Baseline => {
            ctx.verify_circuit()?;
            let exact = ctx.exact(union)?;
            let noisy = ctx.noisy(union)?;
            let ens = ctx.ensemble(&ctx.config.plan())?;
            let rand = ctx.randomized(&ens, union)?;
            let fits = ctx
                .grids
                .regions
                .iter()
                .map(|r| fit_region(r, &exact, &noisy, &rand, ctx.config.fit))
                .collect::<Result<Vec<_>>>()?;
            w.curve("exact", &exact)?;
            w.curve("noisy", &noisy)?;
            if stage == Stage::Grec {
                w.store.write_json("ensemble.json", &ens)?;
                w.randomized(&rand)?;
                for f in &fits {
                    w.curve(&format!("grec_t{}", f.region), &grec_apply(&f.grec, &rand)?)?;
                }
                w.grec_fits(ctx, &fits)?;
                Ok(Some(ens))
            } else {
                for f in &fits {
                    w.curve(&format!("baseline_t{}", f.region), &f.baseline.apply(&noisy)?)?;
                }
                w.baseline_fits(&fits)?;
                Ok(None)
            }
        }
        Stage::Zne => {
            ctx.verify_circuit()?;
            let z = ctx.zne(full)?;
            w.curve("zne", &z.curve)?;
            w.store.write_json(
                "zne_raw.json",
                &json!({
                    "config": ctx.config.zne(),
                    "lambdas": full,
                    "achieved_scales": z.achieved_scales,
                    "raw": z.raw,
                }),
            )?;
            Ok(None)
        }
        Stage::Sweep => {
            ctx.verify_circuit()?;
            let reports = run_sweep(ctx)?;
            let regions: Vec<_> = ctx
                .grids
                .regions
                .iter()
                .zip(&reports)
                .map(|(g, r)| json!({ "region": g.index, "report": r }))
                .collect();
            w.store.write_json("sweep.json", &regions)?;
            if w.format == OutputFormat::Csv {
                let mut csv = String::from("region,n_r,delta,train_rmse,val_rmse\n");
                for (g, r) in ctx.grids.regions.iter().zip(&reports) {
                    for row in &r.rows {
                        csv.push_str(&format!(
                            "{},{},{},{},{}\n",
                            g.index, row.n_r, row.delta, row.train_rmse, row.val_rmse
                        ));
                    }
                }
                w.store.write("sweep.csv", csv.as_bytes())?;
            }
            Ok(None)
        }
        Stage::Stability => {
            let spec = &ctx.config.stability;
            let pole = spec.pole;
            let f = move |z: Complex64| Complex64::new(1.0, 0.0) / (Complex64::new(pole, 0.0) - z);
            let report = stability_experiment(&f, &spec.experiment())?;
            w.store.write_json("stability.json", &json!({ "function": format!("1/({pole} - x)"), "report": report }))?;
            Ok(None)
        }
        Stage::Run => {
            let p = run_pipeline(ctx)?;
            w.store.write_json("verification.json", &p.verification)?;
            w.store.write_json("grids.json", &p.grids)?;
            w.curve("exact", &p.exact)?;
            w.curve("noisy", &p.noisy)?;
            w.store.write_json("ensemble.json", &p.ensemble)?;
            w.randomized(&p.randomized)?;
            for (f, (g, b)) in p.fits.iter().zip(p.grec.iter().zip(&p.baseline)) {
                w.curve(&format!("grec_t{}", f.region), g)?;
                w.curve(&format!("baseline_t{}", f.region), b)?;
            }
            w.grec_fits(ctx, &p.fits)?;
            w.baseline_fits(&p.fits)?;
            w.curve("zne", &p.zne.curve)?;
            w.store.write_json(
                "zne_raw.json",
                &json!({
                    "config": ctx.config.zne(),
                    "lambdas": union,
                    "achieved_scales": p.zne.achieved_scales,
                    "raw": p.zne.raw,
                }),
            )?;
            w.store.write_json("rmse.json", &p.rmse)?;
            w.store.write("rmse.csv", p.rmse.to_csv().as_bytes())?;
            Ok(Some(p.ensemble))
        }
    }
}

/// Looks for `name.csv`, then `name.json`.
pub fn load_curve(dir: &Path, name: &str) -> Result<Option<Curve>> {
    let csv = dir.join(format!("{name}.csv"));
    if csv.exists() {
        let text = std::fs::read_to_string(&csv)?;
        return Curve::from_csv(&text)
            .map(Some)
            .context(|| csv.display().to_string());
    }
    let js = dir.join(format!("{name}.json"));
    if js.exists() {
        let text = std::fs::read_to_string(&js)?;
        return serde_json::from_str(&text).map(Some).map_err(|e| Error::Parse {
            path: js,
            message: e.to_string(),
        });
    }
    Ok(None)
}

fn points(c: &Curve) -> Vec<(f64, f64)> {
    c.lambdas().iter().copied().zip(c.values().iter().copied()).collect()
}

const ORANGE: &str = "#ff7f0e";
const GREEN: &str = "#2ca02c";

/// Renders SVG figures from the curves found in `input` into `out`. A figure
/// is produced only when its curves are present; `exact` is required.
pub fn report(input: &Path, out: &Path) -> Result<Vec<ArtifactRecord>> {
    let exact = load_curve(input, "exact")?
        .ok_or_else(|| Error::Config(format!("no exact curve in {}", input.display())))?;
    let noisy = load_curve(input, "noisy")?;
    let base = |extra: Vec<Series>| {
        let mut s = vec![Series {
            name: "exact".into(),
            points: points(&exact),
            marker: Marker::Line,
            color: "black",
        }];
        if let Some(n) = &noisy {
            s.push(Series {
                name: "noisy".into(),
                points: points(n),
                marker: Marker::Circle,
                color: "#1f77b4",
            });
        }
        s.extend(extra);
        s
    };
    let y_label = "magnetization";
    let mut store = ArtifactStore::create(out)?;

    let pair = |stem: &str, title: &str, file: &str, store: &mut ArtifactStore| -> Result<()> {
        let t1 = load_curve(input, &format!("{stem}_t1"))?;
        let t2 = load_curve(input, &format!("{stem}_t2"))?;
        if t1.is_none() && t2.is_none() {
            return Ok(());
        }
        let mut extra = Vec::new();
        if let Some(c) = t1 {
            extra.push(Series {
                name: format!("{stem}, trained on T1"),
                points: points(&c),
                marker: Marker::Star,
                color: ORANGE,
            });
        }
        if let Some(c) = t2 {
            extra.push(Series {
                name: format!("{stem}, trained on T2"),
                points: points(&c),
                marker: Marker::Triangle,
                color: GREEN,
            });
        }
        store.write(file, svg::render(title, "lambda", y_label, &base(extra)).as_bytes())
    };
    pair("grec", "GREC mitigation", "grec.svg", &mut store)?;
    pair("baseline", "Affine baseline", "baseline.svg", &mut store)?;

    if let Some(z) = load_curve(input, "zne")? {
        let s = base(vec![Series {
            name: "zne".into(),
            points: points(&z),
            marker: Marker::Square,
            color: "#d62728",
        }]);
        store.write("zne.svg", svg::render("Zero-noise extrapolation", "lambda", y_label, &s).as_bytes())?;
    }

    let mut rand = Vec::new();
    for r in 1.. {
        match load_curve(input, &format!("randomized_{r:02}"))? {
            Some(c) => rand.push(Series {
                name: format!("randomized {r}"),
                points: points(&c),
                marker: Marker::Line,
                color: "#9e9e9e",
            }),
            None => break,
        }
    }
    if !rand.is_empty() {
        store.write("randomized.svg", svg::render("Randomized circuits", "lambda", y_label, &base(rand)).as_bytes())?;
    }
    if store.records().is_empty() {
        store.write("exact.svg", svg::render("Exact magnetization", "lambda", y_label, &base(Vec::new())).as_bytes())?;
    }
    Ok(store.commit())
}
