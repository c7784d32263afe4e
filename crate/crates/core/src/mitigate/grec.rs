//! Constrained regression over randomized curves.
//!
//! Minimizes `sum_T (sum_r eta_r A_r + eta_0 - A_exact)^2` subject to
//! `sum_r eta_r = 1` and returns the minimum-norm `(eta_0, eta)` among the
//! minimizers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::curve::{rmse, Curve, CurveLabel};
use super::lsq::constrained_min_norm;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrecOptions {
    /// One clamp-and-resolve pass enforcing `|eta_r| <= 1`.
    pub box_constraint: bool,
    /// Weight residuals by `1 / mean_r(stderr_r^2)`; needs stderrs on every
    /// randomized curve.
    pub weighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrecFit {
    pub eta0: f64,
    pub etas: Vec<f64>,
    pub constraint_residual: f64,
    pub train_rmse: f64,
    pub val_rmse: Option<f64>,
    /// Number of weights with `|eta_r| >= 1`.
    pub box_violations: usize,
}

impl GrecFit {
    pub fn n_r(&self) -> usize {
        self.etas.len()
    }

    /// `sum_r eta_r a_r + eta_0` for one grid point.
    pub fn combine(&self, member_values: &[f64]) -> f64 {
        self.etas.iter().zip(member_values).map(|(e, a)| e * a).sum::<f64>() + self.eta0
    }

    /// RMSE of the mitigated curve against `exact` on `exact`'s grid.
    pub fn rmse_on(&self, randomized: &[Curve], exact: &Curve) -> Result<f64> {
        grec_apply(self, randomized)?.rmse(exact)
    }

    /// Fills `val_rmse` from held-out curves.
    pub fn with_validation(mut self, randomized: &[Curve], exact: &Curve) -> Result<Self> {
        self.val_rmse = Some(self.rmse_on(randomized, exact)?);
        Ok(self)
    }
}

fn check_inputs(randomized: &[Curve], exact: &Curve) -> Result<()> {
    if randomized.is_empty() {
        return Err(Error::Empty("randomized ensemble".into()));
    }
    if exact.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "training grid has {} points, need at least 2",
            exact.len()
        )));
    }
    randomized.iter().try_for_each(|c| c.ensure_same_grid(exact))
}

pub fn grec_fit(randomized: &[Curve], exact: &Curve, options: GrecOptions) -> Result<GrecFit> {
    check_inputs(randomized, exact)?;
    let t = exact.len();
    let n_r = randomized.len();
    let weights = if options.weighted {
        row_weights(randomized)?
    } else {
        vec![1.0; t]
    };
    let column = |r: usize| -> DVector<f64> {
        DVector::from_iterator(t, (0..t).map(|i| weights[i] * randomized[r].values()[i]))
    };
    let y = DVector::from_iterator(t, (0..t).map(|i| weights[i] * exact.values()[i]));
    let ones = DVector::from_vec(weights.clone());

    // Solves with the listed members free and the rest pinned to `pinned`.
    let solve = |free: &[usize], pinned: &[(usize, f64)]| -> Result<Vec<f64>> {
        let mut m = DMatrix::zeros(t, free.len() + 1);
        m.set_column(0, &ones);
        for (j, &r) in free.iter().enumerate() {
            m.set_column(j + 1, &column(r));
        }
        let mut target = y.clone();
        let mut rhs = 1.0;
        for &(r, eta) in pinned {
            target -= column(r) * eta;
            rhs -= eta;
        }
        let mut c = DVector::from_element(free.len() + 1, 1.0);
        c[0] = 0.0;
        let x = constrained_min_norm(&m, &target, &c, rhs)?;
        let mut out = vec![0.0; n_r + 1];
        out[0] = x[0];
        for (j, &r) in free.iter().enumerate() {
            out[r + 1] = x[j + 1];
        }
        for &(r, eta) in pinned {
            out[r + 1] = eta;
        }
        Ok(out)
    };

    let all: Vec<usize> = (0..n_r).collect();
    let mut x = solve(&all, &[])?;
    if options.box_constraint && x[1..].iter().any(|e| e.abs() > 1.0) {
        let mut over: Vec<usize> = all.iter().copied().filter(|&r| x[r + 1].abs() > 1.0).collect();
        if over.len() == n_r {
            // Keep the smallest one free so the equality stays satisfiable.
            let keep = (0..n_r)
                .min_by(|&a, &b| x[a + 1].abs().total_cmp(&x[b + 1].abs()))
                .expect("non-empty ensemble");
            over.retain(|&r| r != keep);
        }
        let pinned: Vec<(usize, f64)> = over.iter().map(|&r| (r, x[r + 1].signum())).collect();
        let free: Vec<usize> = all.iter().copied().filter(|r| !over.contains(r)).collect();
        x = solve(&free, &pinned)?;
    }

    let eta0 = x[0];
    let etas = x[1..].to_vec();
    let mut fit = GrecFit {
        eta0,
        constraint_residual: (etas.iter().sum::<f64>() - 1.0).abs(),
        box_violations: etas.iter().filter(|e| e.abs() >= 1.0).count(),
        etas,
        train_rmse: 0.0,
        val_rmse: None,
    };
    if !fit.eta0.is_finite() || fit.etas.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite("GREC weights".into()));
    }
    fit.train_rmse = fit.rmse_on(randomized, exact)?;
    Ok(fit)
}

fn row_weights(randomized: &[Curve]) -> Result<Vec<f64>> {
    let t = randomized[0].len();
    let mut w = vec![0.0; t];
    for c in randomized {
        let se = c.stderrs().ok_or_else(|| {
            Error::InvalidParameter(format!("weighted fit needs stderrs on the {} curve", c.label()))
        })?;
        for (wi, s) in w.iter_mut().zip(se) {
            *wi += s * s / randomized.len() as f64;
        }
    }
    if w.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter("weighted fit needs positive stderrs".into()));
    }
    Ok(w.into_iter().map(|v| 1.0 / v.sqrt()).collect())
}

/// `sum_r eta_r A_r + eta_0` pointwise on the curves' shared grid.
pub fn grec_apply(fit: &GrecFit, randomized: &[Curve]) -> Result<Curve> {
    if randomized.len() != fit.n_r() {
        return Err(Error::DimensionMismatch {
            expected: fit.n_r(),
            found: randomized.len(),
        });
    }
    let first = randomized.first().ok_or_else(|| Error::Empty("randomized ensemble".into()))?;
    randomized.iter().try_for_each(|c| c.ensure_same_grid(first))?;
    let values = (0..first.len())
        .map(|i| {
            let member: Vec<f64> = randomized.iter().map(|c| c.values()[i]).collect();
            fit.combine(&member)
        })
        .collect();
    Curve::new(CurveLabel::Mitigated, first.lambdas().to_vec(), values, None)
}

/// `max(|g_0|, max_r |g_r - mean(g)|)` for the gradient `g = M^T (M x - y)`;
/// zero exactly when `x` is stationary for the constrained problem.
pub fn kkt_residual(fit: &GrecFit, randomized: &[Curve], exact: &Curve) -> Result<f64> {
    check_inputs(randomized, exact)?;
    let t = exact.len();
    let resid: Vec<f64> = (0..t)
        .map(|i| {
            let member: Vec<f64> = randomized.iter().map(|c| c.values()[i]).collect();
            fit.combine(&member) - exact.values()[i]
        })
        .collect();
    let g0: f64 = resid.iter().sum();
    let g: Vec<f64> = randomized
        .iter()
        .map(|c| c.values().iter().zip(&resid).map(|(a, e)| a * e).sum())
        .collect();
    let mu = g.iter().sum::<f64>() / g.len() as f64;
    Ok(g.iter().map(|gr| (gr - mu).abs()).fold(g0.abs(), f64::max))
}

/// Unweighted training objective for arbitrary weights.
pub fn grec_objective(eta0: f64, etas: &[f64], randomized: &[Curve], exact: &Curve) -> f64 {
    let fitted: Vec<f64> = (0..exact.len())
        .map(|i| etas.iter().zip(randomized).map(|(e, c)| e * c.values()[i]).sum::<f64>() + eta0)
        .collect();
    let r = rmse(&fitted, exact.values());
    r * r * exact.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| 1.5 + 0.05 * i as f64).collect()
    }

    fn exact_curve(l: &[f64]) -> Curve {
        Curve::from_fn(CurveLabel::Exact, l, |x| Ok(0.5 + x / (2.0 * (1.0 + x * x).sqrt()))).unwrap()
    }

    fn shifted(c: &Curve, r: usize, f: impl Fn(f64, f64) -> f64) -> Curve {
        let v = c.lambdas().iter().zip(c.values()).map(|(&l, &v)| f(l, v)).collect();
        Curve::new(CurveLabel::Randomized(r), c.lambdas().to_vec(), v, None).unwrap()
    }

    #[test]
    fn single_member_equal_to_exact() {
        let ex = exact_curve(&grid(10));
        let fit = grec_fit(&[shifted(&ex, 1, |_, v| v)], &ex, GrecOptions::default()).unwrap();
        assert!((fit.etas[0] - 1.0).abs() < 1e-14);
        assert!(fit.eta0.abs() < 1e-14);
        assert!(fit.train_rmse < 1e-14);
    }

    #[test]
    fn symmetric_offsets_give_even_split() {
        let ex = exact_curve(&grid(10));
        let ens = [shifted(&ex, 1, |_, v| v + 0.1), shifted(&ex, 2, |_, v| v - 0.1)];
        let fit = grec_fit(&ens, &ex, GrecOptions::default()).unwrap();
        assert!((fit.etas[0] - 0.5).abs() < 1e-12, "{fit:?}");
        assert!((fit.etas[1] - 0.5).abs() < 1e-12);
        assert!(fit.eta0.abs() < 1e-12);
        assert!(fit.train_rmse < 1e-12);
        assert!(fit.constraint_residual < 1e-10);
    }

    #[test]
    fn offset_absorbs_shift() {
        let ex = exact_curve(&grid(10));
        let fit = grec_fit(&[shifted(&ex, 1, |_, v| v + 0.07)], &ex, GrecOptions::default()).unwrap();
        assert!((fit.etas[0] - 1.0).abs() < 1e-14);
        assert!((fit.eta0 + 0.07).abs() < 1e-13);
        assert!(fit.train_rmse < 1e-13);
    }

    #[test]
    fn errors() {
        let ex = exact_curve(&grid(10));
        assert!(matches!(grec_fit(&[], &ex, GrecOptions::default()), Err(Error::Empty(_))));
        let one = exact_curve(&grid(1));
        assert!(grec_fit(std::slice::from_ref(&one), &one, GrecOptions::default()).is_err());
        let other = exact_curve(&grid(9));
        assert!(grec_fit(&[other], &ex, GrecOptions::default()).is_err());
        let weighted = GrecOptions {
            weighted: true,
            ..Default::default()
        };
        assert!(grec_fit(std::slice::from_ref(&ex), &ex, weighted).is_err());
    }

    #[test]
    fn apply_identities() {
        let l = grid(26);
        let ex = exact_curve(&l);
        let fit = GrecFit {
            eta0: 0.0,
            etas: vec![0.3, -0.2, 0.9],
            constraint_residual: 0.0,
            train_rmse: 0.0,
            val_rmse: None,
            box_violations: 0,
        };
        let ens: Vec<Curve> = (1..=3).map(|r| shifted(&ex, r, |_, v| v)).collect();
        let out = grec_apply(&fit, &ens).unwrap();
        assert!(out.rmse(&ex).unwrap() < 1e-15);
        assert_eq!(out.label(), CurveLabel::Mitigated);

        let shift = GrecFit {
            eta0: -0.07,
            etas: vec![1.0],
            ..fit.clone()
        };
        let out = grec_apply(&shift, &[shifted(&ex, 1, |_, v| v + 0.07)]).unwrap();
        assert!(out.rmse(&ex).unwrap() < 1e-15);

        let flat: Vec<Curve> = (1..=3).map(|r| shifted(&ex, r, |_, _| 0.4)).collect();
        let out = grec_apply(&GrecFit { eta0: 0.05, ..fit.clone() }, &flat).unwrap();
        assert!(out.values().iter().all(|v| (v - 0.45).abs() < 1e-15));

        assert!(grec_apply(&fit, &ens[..2]).is_err());
    }

    #[test]
    fn weighted_fit_downweights_noisy_points() {
        let l = grid(6);
        let ex = exact_curve(&l);
        // One member with a spike at the last point; a huge stderr there
        // makes the weighted offset ignore it.
        let mut v: Vec<f64> = ex.values().iter().map(|v| v + 0.02).collect();
        v[5] += 1.0;
        let mut se = vec![1e-3; 6];
        se[5] = 1e6;
        let c = Curve::new(CurveLabel::Randomized(1), l.clone(), v, Some(se)).unwrap();
        let opts = GrecOptions {
            weighted: true,
            ..Default::default()
        };
        let fit = grec_fit(std::slice::from_ref(&c), &ex, opts).unwrap();
        assert!((fit.eta0 + 0.02).abs() < 1e-9, "{}", fit.eta0);
        let plain = grec_fit(&[c], &ex, GrecOptions::default()).unwrap();
        assert!((plain.eta0 + 0.02 + 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn box_pass_clamps() {
        let l = grid(8);
        let ex = exact_curve(&l);
        // Extrapolation-like ensemble that drives one weight well past 1.
        let ens = vec![
            shifted(&ex, 1, |x, v| v + 0.1 * (x - 1.5)),
            shifted(&ex, 2, |x, v| v + 0.3 * (x - 1.5)),
            shifted(&ex, 3, |x, v| v + 0.05 * (x - 1.5).powi(2)),
        ];
        let free = grec_fit(&ens, &ex, GrecOptions::default()).unwrap();
        assert!(free.box_violations > 0, "{free:?}");
        let boxed = grec_fit(
            &ens,
            &ex,
            GrecOptions {
                box_constraint: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(boxed.constraint_residual < 1e-10);
        assert!(boxed.etas.iter().all(|e| e.abs() <= 1.0 + 1e-12), "{boxed:?}");
        assert!(boxed.train_rmse >= free.train_rmse - 1e-15);
    }

    #[test]
    fn box_keeps_one_free_when_all_exceed() {
        let l = grid(8);
        let ex = exact_curve(&l);
        let ens = vec![
            shifted(&ex, 1, |x, v| v + 0.1 * (x - 1.5)),
            shifted(&ex, 2, |x, v| v + 0.3 * (x - 1.5)),
        ];
        let opts = GrecOptions {
            box_constraint: true,
            ..Default::default()
        };
        let fit = grec_fit(&ens, &ex, opts).unwrap();
        assert!(fit.constraint_residual < 1e-12, "{fit:?}");
    }

    /// Derivative-free oracle: pattern search over `(eta0, eta_2..)` with
    /// `eta_1 = 1 - sum`, probing the full `5^d` stencil around the incumbent.
    fn grid_search(ens: &[Curve], ex: &Curve) -> f64 {
        let dims = ens.len();
        let objective = |p: &[f64]| {
            let mut etas = vec![1.0 - p[1..].iter().sum::<f64>()];
            etas.extend_from_slice(&p[1..]);
            grec_objective(p[0], &etas, ens, ex)
        };
        let mut center = vec![0.0; dims];
        center[1..].iter_mut().for_each(|c| *c = 1.0 / dims as f64);
        let mut best = objective(&center);
        let mut half = 1.0;
        for _ in 0..50_000 {
            let mut best_pt = None;
            let mut on_edge = false;
            for flat in 0..5usize.pow(dims as u32) {
                let mut k = flat;
                let mut p = center.clone();
                let mut edge = false;
                for coord in p.iter_mut() {
                    let off = (k % 5) as f64 - 2.0;
                    k /= 5;
                    edge |= off.abs() == 2.0;
                    *coord += half * off / 2.0;
                }
                let obj = objective(&p);
                if obj < best {
                    best = obj;
                    best_pt = Some(p);
                    on_edge = edge;
                }
            }
            match best_pt {
                Some(p) => {
                    center = p;
                    if on_edge {
                        half *= 2.0;
                    }
                }
                None => half *= 0.5,
            }
            if half < 1e-12 {
                break;
            }
        }
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn matches_grid_search_oracle(
            t in 2usize..=4,
            n_r in 1usize..=3,
            coeffs in prop::collection::vec(-0.3f64..0.3, 12),
        ) {
            let l = grid(t);
            let ex = exact_curve(&l);
            let ens: Vec<Curve> = (0..n_r)
                .map(|r| {
                    let (a, b, c) = (coeffs[3 * r], coeffs[3 * r + 1], coeffs[3 * r + 2]);
                    shifted(&ex, r + 1, |x, v| (1.0 + a) * v + b * (x - 1.5) + c * (x - 1.5).powi(2))
                })
                .collect();
            let fit = grec_fit(&ens, &ex, GrecOptions::default()).unwrap();
            let ours = grec_objective(fit.eta0, &fit.etas, &ens, &ex);
            let oracle = grid_search(&ens, &ex);
            prop_assert!(ours <= oracle + 1e-4, "ours {} oracle {}", ours, oracle);
            prop_assert!(oracle <= ours + 1e-4, "ours {} oracle {}", ours, oracle);
        }

        #[test]
        fn kkt_and_constraint(
            n_r in 1usize..=9,
            seed_vals in prop::collection::vec(-0.2f64..0.2, 27),
        ) {
            let l = grid(10);
            let ex = exact_curve(&l);
            let ens: Vec<Curve> = (0..n_r)
                .map(|r| {
                    let (a, b, c) = (seed_vals[3 * r], seed_vals[3 * r + 1], seed_vals[3 * r + 2]);
                    shifted(&ex, r + 1, |x, v| (0.8 + a) * v + b + c * (x - 1.5).powi(3))
                })
                .collect();
            let fit = grec_fit(&ens, &ex, GrecOptions::default()).unwrap();
            prop_assert!(fit.constraint_residual < 1e-10);
            prop_assert!(kkt_residual(&fit, &ens, &ex).unwrap() < 1e-8);
            let rebuilt = grec_objective(fit.eta0, &fit.etas, &ens, &ex);
            prop_assert!(((rebuilt / l.len() as f64).sqrt() - fit.train_rmse).abs() < 1e-12);
        }

        #[test]
        fn shift_equivariance(
            n_r in 1usize..=5,
            shift in -2.0f64..2.0,
            vals in prop::collection::vec(-0.2f64..0.2, 15),
        ) {
            let l = grid(10);
            let ex = exact_curve(&l);
            let ens: Vec<Curve> = (0..n_r)
                .map(|r| shifted(&ex, r + 1, |x, v| (0.7 + vals[3 * r]) * v + vals[3 * r + 1] * x + vals[3 * r + 2] * x * x))
                .collect();
            let moved_ex = shifted(&ex, 0, |_, v| v + shift).relabeled(CurveLabel::Exact);
            let moved: Vec<Curve> = ens.iter().enumerate().map(|(r, c)| shifted(c, r + 1, |_, v| v + shift)).collect();
            let a = grec_fit(&ens, &ex, GrecOptions::default()).unwrap();
            let b = grec_fit(&moved, &moved_ex, GrecOptions::default()).unwrap();
            // Weights and offset are unchanged up to conditioning of the
            // near-collinear design; compare outputs, which are well posed.
            let out_a = grec_apply(&a, &ens).unwrap();
            let out_b = grec_apply(&b, &moved).unwrap();
            for (x, y) in out_a.values().iter().zip(out_b.values()) {
                prop_assert!((x + shift - y).abs() < 1e-8);
            }
            prop_assert!((a.eta0 - b.eta0).abs() < 1e-6 * (1.0 + a.eta0.abs()));
            for (x, y) in a.etas.iter().zip(&b.etas) {
                prop_assert!((x - y).abs() < 1e-6 * (1.0 + x.abs()));
            }
        }
    }
}
