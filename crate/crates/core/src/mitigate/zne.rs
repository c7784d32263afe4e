//! Linear zero-noise extrapolation with unitary folding.
//!
//! The extrapolation target is the `s = 0` intercept of `v(s) = a + b s`
//! fitted over the achieved scale factors.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curve::{Curve, CurveLabel};
use crate::error::{Error, Result, ResultExt};
use crate::qsim::{derive_seed, Circuit, CircuitFamily, Estimator, Gate};

/// Recorded in run manifests.
pub const ZNE_CONVENTION: &str =
    "linear least-squares fit v(s) = a + b s over achieved scale factors; reported value is the s = 0 intercept a";

/// Sampling-stream key for folded circuits.
const ZNE_STREAM: u64 = 0x7a6e;

/// Tag carried by gates inserted by folding.
pub const FOLD_TAG: &str = "fold";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldMode {
    /// `U -> U (U^dagger U)^m`; odd integer scales only.
    GlobalFold,
    /// `G -> G G^dagger G` on seeded gate choices; any scale >= 1.
    #[default]
    GateFold,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZneFitKind {
    #[default]
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZneConfig {
    pub scale_factors: Vec<f64>,
    pub fold_mode: FoldMode,
    pub fit: ZneFitKind,
    /// Seeds which gates get folded at each scale.
    pub seed: u64,
}

impl Default for ZneConfig {
    fn default() -> Self {
        ZneConfig {
            scale_factors: default_scale_factors(),
            fold_mode: FoldMode::GateFold,
            fit: ZneFitKind::Linear,
            seed: 42,
        }
    }
}

/// Nine factors equally spaced over `[1.0, 1.9]`.
pub fn default_scale_factors() -> Vec<f64> {
    (0..9).map(|i| 1.0 + 0.9 * i as f64 / 8.0).collect()
}

impl ZneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale_factors.len() < 2 {
            return Err(Error::Config("ZNE needs at least two scale factors".into()));
        }
        for &s in &self.scale_factors {
            check_scale(s)?;
        }
        Ok(())
    }
}

fn check_scale(s: f64) -> Result<()> {
    if !s.is_finite() || s < 1.0 {
        return Err(Error::InvalidParameter(format!("scale factor {s} < 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldedCircuit {
    pub circuit: Circuit,
    pub achieved_scale: f64,
}

fn folded_copy(g: &Gate, inverse: bool) -> Gate {
    let mut copy = if inverse { g.inverse() } else { g.clone() };
    copy.tag = Some(FOLD_TAG.into());
    copy
}

pub fn fold_circuit(circuit: &Circuit, scale: f64, mode: FoldMode, seed: u64) -> Result<FoldedCircuit> {
    check_scale(scale)?;
    let k = circuit.len();
    if k == 0 {
        return Ok(FoldedCircuit {
            circuit: circuit.clone(),
            achieved_scale: 1.0,
        });
    }
    match mode {
        FoldMode::GlobalFold => {
            let m = ((scale - 1.0) / 2.0).round();
            if ((2.0 * m + 1.0) - scale).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "global folding needs an odd integer scale, got {scale}"
                )));
            }
            let mut gates = circuit.gates().to_vec();
            for _ in 0..m as usize {
                gates.extend(circuit.gates().iter().rev().map(|g| folded_copy(g, true)));
                gates.extend(circuit.gates().iter().map(|g| folded_copy(g, false)));
            }
            Ok(FoldedCircuit {
                circuit: circuit.with_gates(gates)?,
                achieved_scale: 2.0 * m + 1.0,
            })
        }
        FoldMode::GateFold => {
            let d = (k as f64 * (scale - 1.0) / 2.0).round() as usize;
            let mut times = vec![d / k; k];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in sample(&mut rng, k, d % k) {
                times[i] += 1;
            }
            let mut gates = Vec::with_capacity(k + 2 * d);
            for (g, &m) in circuit.gates().iter().zip(&times) {
                gates.push(g.clone());
                for _ in 0..m {
                    gates.push(folded_copy(g, true));
                    gates.push(folded_copy(g, false));
                }
            }
            Ok(FoldedCircuit {
                circuit: circuit.with_gates(gates)?,
                achieved_scale: (k + 2 * d) as f64 / k as f64,
            })
        }
    }
}

/// Least-squares line through `(xs, ys)`: returns `(intercept, slope)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let w = intercept_weights(xs)?;
    if ys.len() != xs.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    let intercept = w.iter().zip(ys).map(|(w, y)| w * y).sum();
    Ok((intercept, slope))
}

/// `a = sum_i w_i y_i` for the least-squares intercept.
fn intercept_weights(xs: &[f64]) -> Result<Vec<f64>> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(Error::InvalidParameter("linear fit needs two points".into()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 {
        return Err(Error::Singular("all scale factors coincide".into()));
    }
    Ok(xs.iter().map(|x| 1.0 / n - mx * (x - mx) / sxx).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZneResult {
    pub curve: Curve,
    pub achieved_scales: Vec<f64>,
    /// `raw[i][j]`: value at grid point `i` and scale `j`.
    pub raw: Vec<Vec<f64>>,
}

/// Folds, simulates and extrapolates at every grid point. Fold choices
/// depend only on the scale index, so every `lambda` sees the same folded
/// structure.
pub fn zne_run(family: &dyn CircuitFamily, estimator: &Estimator, config: &ZneConfig, grid: &[f64]) -> Result<ZneResult> {
    config.validate()?;
    let per_point: Vec<(Vec<f64>, Vec<f64>, Option<Vec<f64>>)> = grid
        .par_iter()
        .map(|&lambda| -> Result<_> {
            let base = family.build(lambda)?;
            let mut scales = Vec::new();
            let mut values = Vec::new();
            let mut errs = Vec::new();
            for (j, &s) in config.scale_factors.iter().enumerate() {
                let folded = fold_circuit(&base, s, config.fold_mode, derive_seed(config.seed, &[j as u64]))?;
                let (v, se) = estimator.estimate(&folded.circuit, &[ZNE_STREAM, lambda.to_bits(), j as u64])?;
                scales.push(folded.achieved_scale);
                values.push(v);
                errs.push(se);
            }
            let errs = errs.into_iter().collect::<Option<Vec<f64>>>();
            Ok((scales, values, errs))
        })
        .enumerate()
        .map(|(i, r)| r.context(|| format!("ZNE at lambda = {}", grid[i])))
        .collect::<Result<_>>()?;

    let mut values = Vec::with_capacity(grid.len());
    let mut stderrs = Vec::with_capacity(grid.len());
    for (scales, ys, errs) in &per_point {
        let (a, _) = linear_fit(scales, ys)?;
        values.push(a);
        if let Some(errs) = errs {
            let w = intercept_weights(scales)?;
            stderrs.push(w.iter().zip(errs).map(|(w, e)| (w * e).powi(2)).sum::<f64>().sqrt());
        }
    }
    let stderrs = (stderrs.len() == grid.len() && !grid.is_empty()).then_some(stderrs);
    let achieved_scales = per_point.first().map(|p| p.0.clone()).unwrap_or_default();
    Ok(ZneResult {
        curve: Curve::new(CurveLabel::Zne, grid.to_vec(), values, stderrs)?,
        achieved_scales,
        raw: per_point.into_iter().map(|p| p.1).collect(),
    })
}
