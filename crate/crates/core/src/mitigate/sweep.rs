//! Validation-driven choice of ensemble size and randomization strength.

use serde::{Deserialize, Serialize};

use super::curve::{Curve, GRID_TOL};
use super::grec::{grec_fit, GrecOptions};
use crate::error::{Error, Result, ResultExt};

/// Validation RMSEs closer than this count as a tie.
pub const TIE_TOL: f64 = 1e-12;

/// Supplies reference and randomized curves to the sweep.
pub trait SweepContext: Sync {
    fn exact(&self, lambdas: &[f64]) -> Result<Curve>;

    /// The first `n_r` randomized curves at strength `delta`. Member `r` must
    /// not depend on `n_r`; the sweep asks once for the largest size and
    /// uses prefixes.
    fn randomized(&self, n_r: usize, delta: f64, lambdas: &[f64]) -> Result<Vec<Curve>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_r: usize,
    pub delta: f64,
    pub train_rmse: f64,
    pub val_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub best_n_r: usize,
    pub best_delta: f64,
    pub best_val_rmse: f64,
}

pub fn sweep_hyperparameters(
    n_rs: &[usize],
    deltas: &[f64],
    train: &[f64],
    validation: &[f64],
    ctx: &dyn SweepContext,
    options: GrecOptions,
) -> Result<SweepReport> {
    if n_rs.is_empty() || deltas.is_empty() {
        return Err(Error::Empty("sweep candidate list".into()));
    }
    if n_rs.contains(&0) {
        return Err(Error::InvalidParameter("candidate N_R must be >= 1".into()));
    }
    if train.is_empty() || validation.is_empty() {
        return Err(Error::Empty("training or validation grid".into()));
    }
    if train
        .iter()
        .any(|t| validation.iter().any(|v| (t - v).abs() <= GRID_TOL))
    {
        return Err(Error::InvalidParameter("training and validation grids overlap".into()));
    }
    let mut n_rs = n_rs.to_vec();
    n_rs.sort_unstable();
    n_rs.dedup();
    let mut deltas = deltas.to_vec();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let max_n_r = *n_rs.last().expect("non-empty");

    let mut union: Vec<f64> = train.iter().chain(validation).copied().collect();
    union.sort_by(f64::total_cmp);
    let exact = ctx.exact(&union)?;
    let exact_t = exact.restrict(train)?;
    let exact_v = exact.restrict(validation)?;

    let mut rows = Vec::with_capacity(n_rs.len() * deltas.len());
    for &delta in &deltas {
        let all = ctx
            .randomized(max_n_r, delta, &union)
            .context(|| format!("sweep ensemble at delta = {delta}"))?;
        if all.len() < max_n_r {
            return Err(Error::DimensionMismatch {
                expected: max_n_r,
                found: all.len(),
            });
        }
        let on_t = all.iter().map(|c| c.restrict(train)).collect::<Result<Vec<_>>>()?;
        let on_v = all.iter().map(|c| c.restrict(validation)).collect::<Result<Vec<_>>>()?;
        for &n_r in &n_rs {
            let fit = grec_fit(&on_t[..n_r], &exact_t, options)
                .context(|| format!("sweep fit at N_R = {n_r}, delta = {delta}"))?;
            let val = fit.rmse_on(&on_v[..n_r], &exact_v)?;
            rows.push(SweepRow {
                n_r,
                delta,
                train_rmse: fit.train_rmse,
                val_rmse: val,
            });
        }
    }

    // Candidates in (N_R, delta) order; only a clear improvement displaces
    // the incumbent.
    let mut order: Vec<&SweepRow> = rows.iter().collect();
    order.sort_by(|a, b| a.n_r.cmp(&b.n_r).then(a.delta.total_cmp(&b.delta)));
    let mut best = order[0];
    for row in &order[1..] {
        if row.val_rmse < best.val_rmse - TIE_TOL {
            best = row;
        }
    }
    Ok(SweepReport {
        best_n_r: best.n_r,
        best_delta: best.delta,
        best_val_rmse: best.val_rmse,
        rows,
    })
}
