//! Fits that turn noisy curves into mitigated ones: constrained regression
//! over randomized curves, the affine baseline and linear zero-noise
//! extrapolation.

mod baseline;
mod curve;
mod grec;
mod lsq;
mod sweep;
mod zne;

pub use baseline::{baseline_fit, BaselineFit, BaselineMode};
pub use curve::{Curve, CurveLabel, GRID_TOL};
pub use grec::{grec_apply, grec_fit, grec_objective, kkt_residual, GrecFit, GrecOptions};
pub use sweep::{sweep_hyperparameters, SweepContext, SweepReport, SweepRow, TIE_TOL};
pub use zne::{
    default_scale_factors, fold_circuit, linear_fit, zne_run, FoldMode, FoldedCircuit, ZneConfig, ZneFitKind,
    ZneResult, FOLD_TAG, ZNE_CONVENTION,
};
