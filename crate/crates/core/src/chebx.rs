//! Chebyshev least squares on `[-1, 1]` and stable extrapolation past `1`.
//!
//! For data analytic inside the Bernstein ellipse `E_rho` and known to
//! precision `eps` on `M = 4 N^2` equispaced points, a degree-`N` least
//! squares fit extrapolates to `lambda` in `[1, (rho + 1/rho) / 2)` with
//! error at most
//!
//! `C * Q / (1 - r) * ((eps + eps_hat) / Q)^alpha`,
//!
//! `r = (lambda + sqrt(lambda^2 - 1)) / rho`, `alpha = -ln r / ln rho`.
//! Natural logarithms are used; the base cancels in `alpha`.
//!
//! The degree `N` here is the same number as the ensemble size when the
//! bound is read as a statement about the regression over randomized curves.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Largest supported degree.
pub const MAX_DEGREE: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevExtrapolant {
    pub degree: usize,
    /// `c_0 .. c_N`.
    pub coeffs: Vec<f64>,
    pub sample_count: usize,
}

impl ChebyshevExtrapolant {
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Empty("Chebyshev coefficients".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("Chebyshev coefficients".into()));
        }
        Ok(ChebyshevExtrapolant {
            degree: coeffs.len() - 1,
            sample_count: coeffs.len(),
            coeffs,
        })
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        cheb_eval(self, lambda)
    }
}

/// `T_0(x) .. T_degree(x)` by the three-term recurrence.
pub fn chebyshev_basis(x: f64, degree: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(degree + 1);
    t.push(1.0);
    if degree >= 1 {
        t.push(x);
    }
    for n in 2..=degree {
        t.push(2.0 * x * t[n - 1] - t[n - 2]);
    }
    t
}

/// `M` equispaced points covering `[-1, 1]` including both ends.
pub fn equispaced(m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..m).map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64).collect(),
    }
}

/// Least-squares fit in the Chebyshev basis.
///
/// `strict` enforces `M >= max(N + 1, 4 N^2)`; otherwise `M >= N + 1`.
/// Solved through column-scaled normal equations and a Cholesky factor.
pub fn cheb_fit(xs: &[f64], ys: &[f64], degree: usize, strict: bool) -> Result<ChebyshevExtrapolant> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if degree > MAX_DEGREE {
        return Err(Error::InvalidParameter(format!("degree {degree} exceeds {MAX_DEGREE}")));
    }
    let m = xs.len();
    let need = if strict {
        (degree + 1).max(4 * degree * degree)
    } else {
        degree + 1
    };
    if m < need {
        return Err(Error::InvalidParameter(format!(
            "{m} samples for degree {degree}; need at least {need}"
        )));
    }
    for (&x, &y) in xs.iter().zip(ys) {
        ensure_finite(x, "sample abscissa")?;
        ensure_finite(y, "sample value")?;
        if x.abs() > 1.0 + 1e-12 {
            return Err(Error::OutOfDomain(format!("sample x = {x} outside [-1, 1]")));
        }
    }
    let k = degree + 1;
    let mut v = DMatrix::zeros(m, k);
    for (i, &x) in xs.iter().enumerate() {
        for (n, t) in chebyshev_basis(x, degree).into_iter().enumerate() {
            v[(i, n)] = t;
        }
    }
    let scale: Vec<f64> = (0..k).map(|n| 1.0 / v.column(n).norm().max(f64::MIN_POSITIVE)).collect();
    for (n, s) in scale.iter().enumerate() {
        v.column_mut(n).scale_mut(*s);
    }
    let y = DVector::from_column_slice(ys);
    let gram = v.transpose() * &v;
    let rhs = v.transpose() * y;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("normal equations for degree {degree} with {m} samples")))?;
    let z = chol.solve(&rhs);
    let coeffs: Vec<f64> = z.iter().zip(&scale).map(|(z, s)| z * s).collect();
    let mut ext = ChebyshevExtrapolant::from_coeffs(coeffs)?;
    ext.sample_count = m;
    Ok(ext)
}

/// `sum c_n T_n(lambda)` by Clenshaw's recurrence; valid for any finite
/// `lambda`.
pub fn cheb_eval(ext: &ChebyshevExtrapolant, lambda: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in ext.coeffs.iter().skip(1).rev() {
        let b0 = c + 2.0 * lambda * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    ext.coeffs[0] + lambda * b1 - b2
}

/// `[1, (rho + 1/rho) / 2)` as `(start, end)`.
pub fn extrapolation_range(rho: f64) -> Result<(f64, f64)> {
    check_rho(rho)?;
    Ok((1.0, 0.5 * (rho + 1.0 / rho)))
}

fn check_rho(rho: f64) -> Result<()> {
    if !rho.is_finite() || rho <= 1.0 {
        return Err(Error::InvalidParameter(format!("rho = {rho} must exceed 1")));
    }
    Ok(())
}

/// Largest ellipse parameter keeping a real singularity at `x0` (`|x0| > 1`)
/// outside: `rho = |x0| + sqrt(x0^2 - 1)`.
pub fn rho_from_singularity(x0: f64) -> Result<f64> {
    if !x0.is_finite() || x0.abs() <= 1.0 {
        return Err(Error::InvalidParameter(format!("singularity at {x0} lies in [-1, 1]")));
    }
    Ok(x0.abs() + (x0 * x0 - 1.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub rho: f64,
    pub q: f64,
    pub eps: f64,
    pub n_terms: usize,
    /// Largest `|eta_r|`.
    pub eta_max: f64,
    pub c: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        check_rho(self.rho)?;
        if !(self.q > 0.0) {
            return Err(Error::InvalidParameter(format!("Q = {} must be positive", self.q)));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidParameter(format!("eps = {} must be >= 0", self.eps)));
        }
        if !(self.eta_max > 0.0 && self.eta_max <= 1.0) {
            return Err(Error::InvalidParameter(format!("eta_max = {} outside (0, 1]", self.eta_max)));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidParameter(format!("C = {} must be positive", self.c)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub r: f64,
    pub alpha: f64,
    pub bound: f64,
    pub eps_bar: f64,
}

/// Truncation bound with every `|eta_r| = 1`: `2 Q rho^-N / (rho - 1) * N`.
pub fn truncation_bound(q: f64, rho: f64, n_terms: usize) -> f64 {
    2.0 * q * rho.powi(-(n_terms as i32)) / (rho - 1.0) * n_terms as f64
}

/// Extrapolation error bound at `lambda`. At or past the right end of the
/// range `r >= 1` and the bound is reported as infinite.
pub fn error_bound(lambda: f64, inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    ensure_finite(lambda, "lambda")?;
    if lambda < 1.0 {
        return Err(Error::OutOfDomain(format!("lambda = {lambda} < 1")));
    }
    let rho = inputs.rho;
    let r = (lambda + (lambda * lambda - 1.0).sqrt()) / rho;
    let alpha = -r.ln() / rho.ln();
    let eps_bar = truncation_bound(inputs.q, rho, inputs.n_terms);
    // An unbounded Q (singularity on the ellipse) makes the bound vacuous.
    let bound = if r >= 1.0 || inputs.q.is_infinite() {
        f64::INFINITY
    } else {
        let eps_hat = eps_bar / inputs.eta_max;
        inputs.c * inputs.q / (1.0 - r) * ((inputs.eps + eps_hat) / inputs.q).powf(alpha)
    };
    Ok(BoundReport {
        r,
        alpha,
        bound,
        eps_bar,
    })
}

/// A function that can be evaluated off the real axis.
pub trait AnalyticFunction: Sync {
    fn eval_complex(&self, z: Complex64) -> Complex64;

    fn eval(&self, x: f64) -> f64 {
        self.eval_complex(Complex64::new(x, 0.0)).re
    }
}

impl<F: Fn(Complex64) -> Complex64 + Sync> AnalyticFunction for F {
    fn eval_complex(&self, z: Complex64) -> Complex64 {
        self(z)
    }
}

/// `max |f|` over `points` samples of the boundary of `E_rho`; by the
/// maximum modulus principle this is `Q` for `f` analytic inside.
pub fn ellipse_max_modulus(f: &dyn AnalyticFunction, rho: f64, points: usize) -> Result<f64> {
    check_rho(rho)?;
    let points = points.max(8);
    let mut q: f64 = 0.0;
    for k in 0..points {
        let t = 2.0 * std::f64::consts::PI * k as f64 / points as f64;
        let w = Complex64::from_polar(rho, t);
        let v = f.eval_complex(0.5 * (w + 1.0 / w)).norm();
        if !v.is_finite() {
            return Ok(f64::INFINITY);
        }
        q = q.max(v);
    }
    Ok(q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub rho: f64,
    pub degree: usize,
    pub eps_noise: f64,
    pub probes: Vec<f64>,
    pub seed: u64,
    pub c: f64,
    /// Overrides the numerically computed `Q`.
    pub q: Option<f64>,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            rho: 5.0,
            degree: 8,
            eps_noise: 1e-8,
            probes: vec![1.0, 1.1, 1.2, 1.5, 2.0, 2.5],
            seed: 42,
            c: 1.0,
            q: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub lambda: f64,
    pub r: f64,
    pub alpha: f64,
    pub bound: f64,
    pub observed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rho: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub eps: f64,
    pub q: f64,
    pub c: f64,
    pub probes: Vec<ProbeReport>,
    /// Probes where the observed error exceeds the bound.
    pub flagged: Vec<f64>,
}

/// Samples `f` on `4 N^2` equispaced points with uniform noise in
/// `[-eps, eps]`, fits, extrapolates to each probe and compares the observed
/// error with [`error_bound`].
pub fn stability_experiment(f: &dyn AnalyticFunction, config: &StabilityConfig) -> Result<StabilityReport> {
    let (lo, hi) = extrapolation_range(config.rho)?;
    for &p in &config.probes {
        if !(p >= lo && p < hi) {
            return Err(Error::OutOfDomain(format!(
                "probe {p} outside the extrapolation range [{lo}, {hi})"
            )));
        }
    }
    if !(config.eps_noise >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps_noise = {}", config.eps_noise)));
    }
    let n = config.degree;
    let m = (n + 1).max(4 * n * n);
    let xs = equispaced(m);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let u: f64 = rng.random_range(-1.0..=1.0);
            f.eval(x) + config.eps_noise * u
        })
        .collect();
    let ext = cheb_fit(&xs, &ys, n, true)?;
    let q = match config.q {
        Some(q) => q,
        None => ellipse_max_modulus(f, config.rho, 4096)?,
    };
    let inputs = BoundInputs {
        rho: config.rho,
        q,
        eps: config.eps_noise,
        n_terms: n,
        eta_max: 1.0,
        c: config.c,
    };
    let mut probes = Vec::with_capacity(config.probes.len());
    let mut flagged = Vec::new();
    for &lambda in &config.probes {
        let b = error_bound(lambda, &inputs)?;
        let observed = (cheb_eval(&ext, lambda) - f.eval(lambda)).abs();
        if observed > b.bound {
            flagged.push(lambda);
        }
        probes.push(ProbeReport {
            lambda,
            r: b.r,
            alpha: b.alpha,
            bound: b.bound,
            observed,
        });
    }
    Ok(StabilityReport {
        rho: config.rho,
        n,
        m,
        eps: config.eps_noise,
        q,
        c: config.c,
        probes,
        flagged,
    })
}
