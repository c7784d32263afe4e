//! Index kernels for applying local operators to dense `2^n`-dimensional
//! matrices without building the full Kronecker embedding.
//!
//! Qubit 0 is the most significant bit of a basis index, matching
//! `kron(q0, q1, ..., q_{n-1})`.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[inline]
pub(crate) fn bit_mask(qubit: usize, width: usize) -> usize {
    1 << (width - 1 - qubit)
}

/// Basis indices addressed by an operator on `qubits`, for one assignment of
/// the remaining bits (`base` must have zeros on the acted bits). The local
/// index uses `qubits[0]` as its most significant bit.
fn local_indices(base: usize, masks: &[usize], out: &mut [usize]) {
    let k = masks.len();
    for (local, slot) in out.iter_mut().enumerate() {
        let mut idx = base;
        for (pos, &m) in masks.iter().enumerate() {
            if (local >> (k - 1 - pos)) & 1 == 1 {
                idx |= m;
            }
        }
        *slot = idx;
    }
}

fn bases(dim: usize, acted: usize) -> impl Iterator<Item = usize> {
    (0..dim).filter(move |i| i & acted == 0)
}

/// `m <- (op on qubits) * m`.
pub(crate) fn apply_left(m: &mut DMatrix<Complex64>, op: &DMatrix<Complex64>, qubits: &[usize], width: usize) {
    let masks: Vec<usize> = qubits.iter().map(|&q| bit_mask(q, width)).collect();
    let acted: usize = masks.iter().fold(0, |a, b| a | b);
    let local = op.nrows();
    let mut idx = vec![0usize; local];
    let mut buf = vec![Complex64::default(); local];
    let dim = m.nrows();
    for base in bases(dim, acted) {
        local_indices(base, &masks, &mut idx);
        for col in 0..m.ncols() {
            for (a, &i) in idx.iter().enumerate() {
                buf[a] = m[(i, col)];
            }
            for (a, &i) in idx.iter().enumerate() {
                let mut acc = Complex64::default();
                for (b, v) in buf.iter().enumerate() {
                    acc += op[(a, b)] * v;
                }
                m[(i, col)] = acc;
            }
        }
    }
}

/// `m <- m * (op on qubits)^dagger`.
pub(crate) fn apply_right_adjoint(
    m: &mut DMatrix<Complex64>,
    op: &DMatrix<Complex64>,
    qubits: &[usize],
    width: usize,
) {
    let masks: Vec<usize> = qubits.iter().map(|&q| bit_mask(q, width)).collect();
    let acted: usize = masks.iter().fold(0, |a, b| a | b);
    let local = op.nrows();
    let mut idx = vec![0usize; local];
    let mut buf = vec![Complex64::default(); local];
    let dim = m.ncols();
    for base in bases(dim, acted) {
        local_indices(base, &masks, &mut idx);
        for row in 0..m.nrows() {
            for (a, &j) in idx.iter().enumerate() {
                buf[a] = m[(row, j)];
            }
            for (a, &j) in idx.iter().enumerate() {
                let mut acc = Complex64::default();
                for (b, v) in buf.iter().enumerate() {
                    acc += v * op[(a, b)].conj();
                }
                m[(row, j)] = acc;
            }
        }
    }
}

/// `m <- U m U^dagger` for a local unitary.
pub(crate) fn conjugate(m: &mut DMatrix<Complex64>, op: &DMatrix<Complex64>, qubits: &[usize], width: usize) {
    apply_left(m, op, qubits, width);
    apply_right_adjoint(m, op, qubits, width);
}

/// `m <- sum_k K m K^dagger`.
pub(crate) fn kraus(m: &mut DMatrix<Complex64>, ops: &[DMatrix<Complex64>], qubits: &[usize], width: usize) {
    let mut acc = DMatrix::<Complex64>::zeros(m.nrows(), m.ncols());
    for k in ops {
        let mut term = m.clone();
        conjugate(&mut term, k, qubits, width);
        acc += term;
    }
    *m = acc;
}

/// Depolarizing channel on `qubits`:
/// `rho <- (1-p) rho + p (I_S / 2^k) (x) Tr_S rho`.
///
/// Identical to the Pauli Kraus form with weights `1 - (4^k-1)p/4^k` and
/// `p/4^k`, but linear in the matrix size.
pub(crate) fn depolarize(m: &mut DMatrix<Complex64>, p: f64, qubits: &[usize], width: usize) {
    if p == 0.0 {
        return;
    }
    let masks: Vec<usize> = qubits.iter().map(|&q| bit_mask(q, width)).collect();
    let acted: usize = masks.iter().fold(0, |a, b| a | b);
    let local = 1usize << qubits.len();
    let mut idx = vec![0usize; local];
    let mut jdx = vec![0usize; local];
    let dim = m.nrows();
    let keep = 1.0 - p;
    let mix = p / local as f64;
    let bases: Vec<usize> = bases(dim, acted).collect();
    let mut out = m.map(|z| z * keep);
    for &bi in &bases {
        local_indices(bi, &masks, &mut idx);
        for &bj in &bases {
            local_indices(bj, &masks, &mut jdx);
            let mut trace = Complex64::default();
            for s in 0..local {
                trace += m[(idx[s], jdx[s])];
            }
            let add = trace * mix;
            for s in 0..local {
                out[(idx[s], jdx[s])] += add;
            }
        }
    }
    *m = out;
}
