//! Experiment configuration (TOML) and the grids derived from it.
//!
//! ```toml
//! master_seed = 42          # optional; overrides plan.seed and zne.seed
//! shots = 8192              # optional; exact expectations when absent
//!
//! [lambda_grid]
//! min = 1.0
//! max = 3.5
//! count = 26
//!
//! [regions]
//! k1 = [1.0, 2.0]
//! t1 = [1.5, 2.0]
//! v1 = [1.0, 1.5]
//! k2 = [2.5, 3.5]
//! t2 = [2.5, 3.0]
//! v2 = [3.0, 3.5]
//! points_per_region = 10
//!
//! [noise]                   # qsim::NoiseModel
//! p1 = 0.002
//!
//! [plan]                    # randomize::RandomizationPlan
//! [zne]                     # mitigate::ZneConfig
//! [fit]                     # mitigate::GrecOptions
//! [sweep]
//! n_r = [3, 6, 9]
//! delta = [0.05, 0.1, 0.2]
//!
//! [stability]               # Chebyshev experiment on 1 / (pole - x)
//! pole = 3.0
//! rho = 5.0
//! degree = 8
//! ```
//!
//! Every section is optional and unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chebx::StabilityConfig;
use crate::error::{Error, Result};
use crate::mitigate::{GrecOptions, ZneConfig, GRID_TOL};
use crate::qsim::NoiseModel;
use crate::randomize::RandomizationPlan;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            min: 1.0,
            max: 3.5,
            count: 26,
        }
    }
}

impl GridSpec {
    /// `count` points from `min` to `max`, both included.
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.min + h * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Regions {
    pub k1: [f64; 2],
    pub t1: [f64; 2],
    pub v1: [f64; 2],
    pub k2: [f64; 2],
    pub t2: [f64; 2],
    pub v2: [f64; 2],
    pub points_per_region: usize,
}

impl Default for Regions {
    fn default() -> Self {
        Regions {
            k1: [1.0, 2.0],
            t1: [1.5, 2.0],
            v1: [1.0, 1.5],
            k2: [2.5, 3.5],
            t2: [2.5, 3.0],
            v2: [3.0, 3.5],
            points_per_region: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub n_r: Vec<usize>,
    pub delta: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            n_r: vec![9],
            delta: vec![0.1],
        }
    }
}

/// Chebyshev stability experiment on `f(x) = 1 / (pole - x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySpec {
    pub pole: f64,
    pub rho: f64,
    pub degree: usize,
    pub eps_noise: f64,
    pub probes: Vec<f64>,
    pub seed: u64,
    pub c: f64,
}

impl Default for StabilitySpec {
    fn default() -> Self {
        let d = StabilityConfig::default();
        StabilitySpec {
            pole: 3.0,
            rho: d.rho,
            degree: d.degree,
            eps_noise: d.eps_noise,
            probes: d.probes,
            seed: d.seed,
            c: d.c,
        }
    }
}

impl StabilitySpec {
    pub fn experiment(&self) -> StabilityConfig {
        StabilityConfig {
            rho: self.rho,
            degree: self.degree,
            eps_noise: self.eps_noise,
            probes: self.probes.clone(),
            seed: self.seed,
            c: self.c,
            q: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: Option<u64>,
    pub shots: Option<u64>,
    pub lambda_grid: GridSpec,
    pub regions: Regions,
    pub noise: NoiseModel,
    pub plan: RandomizationPlan,
    pub zne: ZneConfig,
    pub fit: GrecOptions,
    pub sweep: SweepSpec,
    pub stability: StabilitySpec,
}

/// One classically accessible region split into training and validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub index: usize,
    pub train: Vec<f64>,
    pub validation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub full: Vec<f64>,
    pub regions: [RegionGrid; 2],
    /// Sorted union of every grid above.
    pub union: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// The seed for the ensemble, after `master_seed` is applied.
    pub fn plan(&self) -> RandomizationPlan {
        RandomizationPlan {
            seed: self.master_seed.unwrap_or(self.plan.seed),
            ..self.plan
        }
    }

    pub fn zne(&self) -> ZneConfig {
        ZneConfig {
            seed: self.master_seed.unwrap_or(self.zne.seed),
            ..self.zne.clone()
        }
    }

    /// Seed for finite-shot sampling.
    pub fn shot_seed(&self) -> u64 {
        self.master_seed.unwrap_or(self.plan.seed)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        let g = &self.lambda_grid;
        if !(g.min.is_finite() && g.max.is_finite()) || g.count == 0 || (g.count > 1 && g.max <= g.min) {
            return cfg(format!("lambda_grid {g:?} is empty or inverted"));
        }
        if g.min < 0.0 {
            return cfg(format!("lambda_grid.min = {} < 0", g.min));
        }
        if self.shots == Some(0) {
            return cfg("shots must be >= 1".into());
        }
        let r = &self.regions;
        if r.points_per_region < 2 {
            return cfg("points_per_region must be >= 2".into());
        }
        let inside = |inner: [f64; 2], outer: [f64; 2]| {
            inner[0] >= outer[0] - GRID_TOL && inner[1] <= outer[1] + GRID_TOL
        };
        for (name, iv) in [
            ("k1", r.k1),
            ("t1", r.t1),
            ("v1", r.v1),
            ("k2", r.k2),
            ("t2", r.t2),
            ("v2", r.v2),
        ] {
            if !(iv[0].is_finite() && iv[1].is_finite()) || iv[1] <= iv[0] {
                return cfg(format!("region {name} = {iv:?} is empty"));
            }
        }
        for (k, t, v, i) in [(r.k1, r.t1, r.v1, 1), (r.k2, r.t2, r.v2, 2)] {
            if !inside(k, [g.min, g.max]) {
                return cfg(format!("k{i} = {k:?} is outside the lambda grid"));
            }
            if !inside(t, k) || !inside(v, k) {
                return cfg(format!("t{i} and v{i} must lie within k{i}"));
            }
            if t[0] < v[1] - GRID_TOL && v[0] < t[1] - GRID_TOL {
                return cfg(format!("t{i} = {t:?} and v{i} = {v:?} overlap"));
            }
        }
        self.noise.validate().map_err(|e| Error::Config(format!("noise: {e}")))?;
        self.plan.validate().map_err(|e| Error::Config(format!("plan: {e}")))?;
        if self.plan.n_r == 0 {
            return cfg("plan.n_r must be >= 1".into());
        }
        self.zne.validate().map_err(|e| Error::Config(format!("zne: {e}")))?;
        if self.sweep.n_r.is_empty() || self.sweep.delta.is_empty() {
            return cfg("sweep candidate lists must be non-empty".into());
        }
        if self.sweep.n_r.contains(&0) || self.sweep.delta.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return cfg("sweep candidates need n_r >= 1 and delta >= 0".into());
        }
        let st = &self.stability;
        if !(st.pole.is_finite() && st.pole.abs() > 1.0) {
            return cfg(format!("stability.pole = {} must lie outside [-1, 1]", st.pole));
        }
        Ok(())
    }

    pub fn grids(&self) -> Grids {
        let r = &self.regions;
        let n = r.points_per_region;
        let full = self.lambda_grid.points();
        let region = |index, t: [f64; 2], v: [f64; 2]| RegionGrid {
            index,
            train: closed(t, n),
            validation: validation_points(v, t, n),
        };
        let regions = [region(1, r.t1, r.v1), region(2, r.t2, r.v2)];
        let mut union: Vec<f64> = full
            .iter()
            .chain(regions.iter().flat_map(|g| g.train.iter().chain(&g.validation)))
            .copied()
            .collect();
        union.sort_by(f64::total_cmp);
        union.dedup_by(|a, b| (*a - *b).abs() <= GRID_TOL);
        Grids { full, regions, union }
    }
}

fn closed(iv: [f64; 2], n: usize) -> Vec<f64> {
    let h = (iv[1] - iv[0]) / (n - 1) as f64;
    (0..n).map(|i| iv[0] + h * i as f64).collect()
}

/// `n` points of `v` with spacing `|v| / n`, leaving out the endpoint shared
/// with `t` so the two grids stay disjoint.
fn validation_points(v: [f64; 2], t: [f64; 2], n: usize) -> Vec<f64> {
    let h = (v[1] - v[0]) / n as f64;
    if (v[1] - t[0]).abs() <= GRID_TOL {
        (0..n).map(|i| v[0] + h * i as f64).collect()
    } else if (v[0] - t[1]).abs() <= GRID_TOL {
        (0..n).rev().map(|i| v[1] - h * i as f64).collect()
    } else {
        closed(v, n)
    }
}
