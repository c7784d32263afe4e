//! Two-parameter affine correction `ideal ~ eta1 * noisy + eta0`.

use serde::{Deserialize, Serialize};

use super::curve::{Curve, CurveLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    /// Ordinary least squares in `(eta0, eta1)`.
    #[default]
    Affine,
    /// `eta1 = 1`; only the offset is fitted.
    OffsetOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFit {
    pub mode: BaselineMode,
    pub eta0: f64,
    pub eta1: f64,
    pub train_rmse: f64,
    pub val_rmse: Option<f64>,
}

impl BaselineFit {
    pub fn apply(&self, noisy: &Curve) -> Result<Curve> {
        let values = noisy.values().iter().map(|v| self.eta1 * v + self.eta0).collect();
        Curve::new(CurveLabel::Mitigated, noisy.lambdas().to_vec(), values, None)
    }

    pub fn with_validation(mut self, noisy: &Curve, exact: &Curve) -> Result<Self> {
        self.val_rmse = Some(self.apply(noisy)?.rmse(exact)?);
        Ok(self)
    }
}

pub fn baseline_fit(noisy: &Curve, exact: &Curve, mode: BaselineMode) -> Result<BaselineFit> {
    noisy.ensure_same_grid(exact)?;
    let n = noisy.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "training grid has {n} points, need at least 2"
        )));
    }
    let x = noisy.values();
    let y = exact.values();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(x), mean(y));
    let (eta0, eta1) = match mode {
        BaselineMode::Affine => {
            let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
            let scale = x.iter().map(|a| a * a).sum::<f64>().max(f64::MIN_POSITIVE);
            if sxx <= 1e-24 * scale {
                return Err(Error::Singular("noisy training curve is constant".into()));
            }
            let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
            let eta1 = sxy / sxx;
            (my - eta1 * mx, eta1)
        }
        BaselineMode::OffsetOnly => (my - mx, 1.0),
    };
    let mut fit = BaselineFit {
        mode,
        eta0,
        eta1,
        train_rmse: 0.0,
        val_rmse: None,
    };
    fit.train_rmse = fit.apply(noisy)?.rmse(exact)?;
    Ok(fit)
}
