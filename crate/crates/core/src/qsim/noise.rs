//! Noise channels attached after every gate.
//!
//! None of the presets here are device data; they are knobs for exercising
//! the mitigators.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_probability, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Depolarizing probability after every single-qubit gate.
    pub p1: f64,
    /// Depolarizing probability after every two-qubit gate.
    pub p2: f64,
    /// Amplitude-damping rate applied to each qubit a gate touches.
    pub gamma_ad: f64,
    /// Fractional over-rotation: every angle is multiplied by `1 + coherent_eps`.
    pub coherent_eps: f64,
    /// Classical bit-flip probability per measured qubit.
    pub readout_flip: f64,
    /// Whole-register depolarizing channel applied once after the last gate.
    pub global_depolarizing: f64,
}

impl NoiseModel {
    pub fn ideal() -> Self {
        Self::default()
    }

    /// Only a single end-of-circuit depolarizing channel of strength `p`.
    pub fn global_only(p: f64) -> Self {
        NoiseModel {
            global_depolarizing: p,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_probability(self.p1, "p1")?;
        ensure_probability(self.p2, "p2")?;
        ensure_probability(self.gamma_ad, "gamma_ad")?;
        ensure_probability(self.readout_flip, "readout_flip")?;
        ensure_probability(self.global_depolarizing, "global_depolarizing")?;
        ensure_finite(self.coherent_eps, "coherent_eps")
    }

    pub fn is_ideal(&self) -> bool {
        *self == Self::default()
    }

    /// Angle multiplier from coherent over-rotation.
    pub fn angle_factor(&self) -> f64 {
        1.0 + self.coherent_eps
    }

    pub fn depolarizing_for(&self, arity: usize) -> f64 {
        if arity == 1 {
            self.p1
        } else {
            self.p2
        }
    }
}

fn pauli(index: usize) -> DMatrix<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match index {
        0 => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        1 => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        2 => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        _ => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Pauli Kraus operators of the `k`-qubit depolarizing channel
/// `rho -> (1-p) rho + p I/2^k (x) Tr rho`: `4^k` operators.
pub fn depolarizing_kraus(p: f64, qubits: usize) -> Vec<DMatrix<Complex64>> {
    let count = 1usize << (2 * qubits);
    let identity_weight = 1.0 - p * (count - 1) as f64 / count as f64;
    let other_weight = p / count as f64;
    (0..count)
        .map(|label| {
            let mut op = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
            for pos in (0..qubits).rev() {
                let sigma = pauli((label >> (2 * pos)) & 3);
                op = op.kronecker(&sigma);
            }
            let w = if label == 0 { identity_weight } else { other_weight };
            op * Complex64::new(w.sqrt(), 0.0)
        })
        .collect()
}

pub fn amplitude_damping_kraus(gamma: f64) -> Vec<DMatrix<Complex64>> {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    vec![
        DMatrix::from_row_slice(2, 2, &[o, z, z, Complex64::new((1.0 - gamma).sqrt(), 0.0)]),
        DMatrix::from_row_slice(2, 2, &[z, Complex64::new(gamma.sqrt(), 0.0), z, z]),
    ]
}

/// Largest entry of `sum K^dagger K - I`.
pub fn completeness_defect(ops: &[DMatrix<Complex64>]) -> f64 {
    let dim = ops[0].nrows();
    let mut acc = DMatrix::<Complex64>::zeros(dim, dim);
    for k in ops {
        acc += k.adjoint() * k;
    }
    (acc - DMatrix::identity(dim, dim))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_model_is_ideal() {
        assert!(NoiseModel::ideal().is_ideal());
        assert_eq!(NoiseModel::ideal().angle_factor(), 1.0);
    }

    #[test]
    fn validation() {
        assert!(NoiseModel { p1: 1.2, ..NoiseModel::ideal() }.validate().is_err());
        assert!(NoiseModel { readout_flip: -0.1, ..NoiseModel::ideal() }.validate().is_err());
        assert!(NoiseModel { coherent_eps: f64::INFINITY, ..NoiseModel::ideal() }.validate().is_err());
        assert!(NoiseModel { p1: 1.0, p2: 0.0, gamma_ad: 0.3, ..NoiseModel::ideal() }.validate().is_ok());
    }

    #[test]
    fn kraus_counts() {
        assert_eq!(depolarizing_kraus(0.1, 1).len(), 4);
        assert_eq!(depolarizing_kraus(0.1, 2).len(), 16);
        assert_eq!(depolarizing_kraus(0.1, 2)[0].nrows(), 4);
    }

    proptest! {
        #[test]
        fn channels_are_complete(p in 0.0f64..=1.0, gamma in 0.0f64..=1.0) {
            prop_assert!(completeness_defect(&depolarizing_kraus(p, 1)) < 1e-12);
            prop_assert!(completeness_defect(&depolarizing_kraus(p, 2)) < 1e-12);
            prop_assert!(completeness_defect(&amplitude_damping_kraus(gamma)) < 1e-12);
        }
    }
}
