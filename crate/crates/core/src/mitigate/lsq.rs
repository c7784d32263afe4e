//! Dense least-squares kernels shared by the fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Minimum-norm least-squares solution of `a x ~ b` through the SVD
/// pseudo-inverse. Singular values below `max(m, n) * eps * s_max` are
/// treated as zero.
pub(crate) fn min_norm_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let svd = a.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let tol = a.nrows().max(a.ncols()) as f64 * f64::EPSILON * s_max;
    if s_max == 0.0 {
        return Ok(DVector::zeros(a.ncols()));
    }
    svd.solve(b, tol).map_err(|e| Error::Singular(e.to_string()))
}

/// Minimum-norm minimizer of `|m x - y|^2` subject to `c . x = rhs`.
///
/// The constraint is removed by writing `x = x_p + n z`, where `x_p` is the
/// minimum-norm point on the constraint plane and the columns of `n` are an
/// orthonormal basis of `c`'s complement. Since `x_p` is orthogonal to every
/// `n z`, the minimum-norm `z` gives the minimum-norm `x`.
pub(crate) fn constrained_min_norm(m: &DMatrix<f64>, y: &DVector<f64>, c: &DVector<f64>, rhs: f64) -> Result<DVector<f64>> {
    let k = c.len();
    let cc = c.norm_squared();
    if cc == 0.0 {
        return Err(Error::Singular("zero constraint row".into()));
    }
    let xp = c * (rhs / cc);
    let n = complement_basis(c);
    let residual = y - m * &xp;
    let z = min_norm_lstsq(&(m * &n), &residual)?;
    let x = xp + n * z;
    debug_assert_eq!(x.len(), k);
    Ok(x)
}

/// Orthonormal basis (as columns) of the orthogonal complement of `c`, taken
/// from the Householder reflector that maps `c / |c|` to a multiple of `e_0`.
pub(crate) fn complement_basis(c: &DVector<f64>) -> DMatrix<f64> {
    let k = c.len();
    let u = c / c.norm();
    let mut v = u.clone();
    // Sign choice avoids cancellation in v = u + sign(u_0) e_0.
    v[0] += if u[0] >= 0.0 { 1.0 } else { -1.0 };
    let h = DMatrix::identity(k, k) - (&v * v.transpose()) * (2.0 / v.norm_squared());
    h.columns(1, k - 1).into_owned()
}
