use serde::{Deserialize, Serialize};

use super::circuit::Circuit;
use super::density::{apply_circuit, expect_mean_z, DensityMatrix};
use super::noise::NoiseModel;
use super::sampling::sample_expectation;
use crate::error::{Error, Result};

/// Mean-Z readout under a noise model, either exact or from finite shots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimator {
    pub noise: NoiseModel,
    pub shots: Option<u64>,
    pub seed: u64,
}

impl Estimator {
    pub fn exact(noise: NoiseModel) -> Self {
        Estimator {
            noise,
            shots: None,
            seed: 0,
        }
    }

    /// Value and, in shot mode, its standard error. `key` picks an
    /// independent sampling stream, so results do not depend on call order.
    pub fn estimate(&self, circuit: &Circuit, key: &[u64]) -> Result<(f64, Option<f64>)> {
        self.noise.validate()?;
        let rho0 = DensityMatrix::zero_state(circuit.width())?;
        let rho = apply_circuit(&rho0, circuit, &self.noise)?;
        match self.shots {
            None => Ok(((1.0 - 2.0 * self.noise.readout_flip) * expect_mean_z(&rho), None)),
            Some(0) => Err(Error::InvalidParameter("shots must be >= 1".into())),
            Some(shots) => {
                let (m, se) = sample_expectation(&rho, shots, derive_seed(self.seed, key), self.noise.readout_flip)?;
                Ok((m, Some(se)))
            }
        }
    }
}

/// Folds `key` into `seed` with splitmix64 steps.
pub fn derive_seed(seed: u64, key: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    key.iter().fold(mix(seed), |acc, &k| mix(acc ^ mix(k)))
}
