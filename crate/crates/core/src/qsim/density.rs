//! Exact density-matrix evolution with per-gate Kraus noise.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::circuit::{Circuit, MAX_DENSE_WIDTH};
use super::gate::Gate;
use super::noise::{amplitude_damping_kraus, NoiseModel};
use super::ops;
use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    width: usize,
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// `|0...0><0...0|` on `width` qubits.
    pub fn zero_state(width: usize) -> Result<Self> {
        Self::check_width(width)?;
        let dim = 1usize << width;
        let mut entries = DMatrix::zeros(dim, dim);
        entries[(0, 0)] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { width, entries })
    }

    pub fn maximally_mixed(width: usize) -> Result<Self> {
        Self::check_width(width)?;
        let dim = 1usize << width;
        let entries = DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0);
        Ok(DensityMatrix { width, entries })
    }

    /// Pure state `|psi><psi|` for a normalized amplitude vector.
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "state length {dim} is not a power of two"
            )));
        }
        let width = dim.trailing_zeros() as usize;
        Self::check_width(width)?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("state norm^2 = {norm}")));
        }
        let psi = nalgebra::DVector::from_column_slice(amplitudes);
        let entries = &psi * psi.adjoint();
        Ok(DensityMatrix { width, entries })
    }

    /// Computational basis state `|index>`.
    pub fn basis_state(width: usize, index: usize) -> Result<Self> {
        Self::check_width(width)?;
        let dim = 1usize << width;
        if index >= dim {
            return Err(Error::InvalidParameter(format!("basis index {index} >= {dim}")));
        }
        let mut entries = DMatrix::zeros(dim, dim);
        entries[(index, index)] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { width, entries })
    }

    /// Wraps raw entries after checking the density-matrix invariants.
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim != entries.ncols() || !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "density matrix shape {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let rho = DensityMatrix {
            width: dim.trailing_zeros() as usize,
            entries,
        };
        rho.check_invariants(1e-10)?;
        Ok(rho)
    }

    fn check_width(width: usize) -> Result<()> {
        if width == 0 {
            return Err(Error::InvalidParameter("width must be >= 1".into()));
        }
        if width > MAX_DENSE_WIDTH {
            return Err(Error::WidthGuard {
                width,
                max: MAX_DENSE_WIDTH,
            });
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.entries - self.entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Hermitian, unit trace and positive semidefinite, all within `tol`.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > tol {
            return Err(Error::InvalidParameter(format!("not Hermitian ({herm:e})")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidParameter(format!("trace = {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -tol {
            return Err(Error::InvalidParameter(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Diagonal in the computational basis, i.e. outcome probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    /// `U rho U^dagger` for a gate, without noise.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        if gate.qubits.iter().any(|&q| q >= self.width) {
            return Err(Error::DimensionMismatch {
                expected: self.width,
                found: gate.qubits.iter().copied().max().unwrap_or(0) + 1,
            });
        }
        ops::conjugate(&mut self.entries, &gate.kind.matrix(), &gate.qubits, self.width);
        Ok(())
    }

    pub fn depolarize(&mut self, p: f64, qubits: &[usize]) {
        ops::depolarize(&mut self.entries, p, qubits, self.width);
    }

    pub fn depolarize_global(&mut self, p: f64) {
        let all: Vec<usize> = (0..self.width).collect();
        self.depolarize(p, &all);
    }

    pub fn amplitude_damp(&mut self, gamma: f64, qubit: usize) {
        if gamma == 0.0 {
            return;
        }
        ops::kraus(&mut self.entries, &amplitude_damping_kraus(gamma), &[qubit], self.width);
    }

    /// Applies an arbitrary Kraus set on `qubits`.
    pub fn apply_kraus(&mut self, kraus: &[DMatrix<Complex64>], qubits: &[usize]) {
        ops::kraus(&mut self.entries, kraus, qubits, self.width);
    }
}

/// Mean of `<Z_i>` over all qubits; `+1` for `|0...0>`.
pub fn expect_mean_z(rho: &DensityMatrix) -> f64 {
    rho.probabilities()
        .into_iter()
        .enumerate()
        .map(|(x, p)| p * mean_z_of_outcome(x, rho.width()))
        .sum()
}

/// Per-outcome mean Z for a basis index: `(n - 2 popcount) / n`.
pub(crate) fn mean_z_of_outcome(x: usize, width: usize) -> f64 {
    let ones = x.count_ones() as f64;
    let n = width as f64;
    (n - 2.0 * ones) / n
}

/// Runs `circuit` on `rho0` with `noise` attached after each physical gate.
///
/// Placement rules:
/// - every angle is scaled by `1 + coherent_eps` before the gate matrix is built;
/// - after each physical gate: depolarizing (`p1` or `p2`) on its qubits, then
///   amplitude damping on each of its qubits;
/// - an auxiliary single-qubit gate directly following a single-qubit gate on
///   the same qubit is fused with it and shares one noise application;
/// - auxiliary gates whose angles are all exactly zero compile away;
/// - `global_depolarizing` acts once on the whole register at the end.
pub fn apply_circuit(rho0: &DensityMatrix, circuit: &Circuit, noise: &NoiseModel) -> Result<DensityMatrix> {
    if circuit.width() != rho0.width() {
        return Err(Error::DimensionMismatch {
            expected: rho0.width(),
            found: circuit.width(),
        });
    }
    noise.validate()?;
    let factor = noise.angle_factor();
    let gates = circuit.gates();
    let mut rho = rho0.clone();
    let mut i = 0;
    while i < gates.len() {
        let head = &gates[i];
        let mut end = i + 1;
        if head.is_single_qubit() {
            while end < gates.len()
                && gates[end].is_auxiliary()
                && gates[end].is_single_qubit()
                && gates[end].qubits == head.qubits
            {
                end += 1;
            }
        }
        let group = &gates[i..end];
        i = end;

        if group.iter().all(|g| g.is_auxiliary() && g.kind.is_exact_identity()) {
            continue;
        }
        for gate in group {
            let kind = gate.kind.scaled(factor);
            for p in kind.params() {
                ensure_finite(p, "scaled gate angle")?;
            }
            rho.apply_gate(&Gate {
                kind,
                qubits: gate.qubits.clone(),
                tag: None,
            })?;
        }
        let p = noise.depolarizing_for(head.qubits.len());
        rho.depolarize(p, &head.qubits);
        for &q in &head.qubits {
            rho.amplitude_damp(noise.gamma_ad, q);
        }
    }
    rho.depolarize_global(noise.global_depolarizing);
    Ok(rho)
}
