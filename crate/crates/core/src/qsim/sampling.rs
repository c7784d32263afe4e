//! Finite-shot emulation of computational-basis measurement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::density::{mean_z_of_outcome, DensityMatrix};
use crate::error::{ensure_probability, Error, Result};

/// Sample mean of per-shot mean-Z and its standard error.
///
/// Each shot draws an outcome from the diagonal of `rho` and flips every
/// measured bit independently with probability `readout_flip`.
pub fn sample_expectation(rho: &DensityMatrix, shots: u64, seed: u64, readout_flip: f64) -> Result<(f64, f64)> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be >= 1".into()));
    }
    ensure_probability(readout_flip, "readout_flip")?;
    let width = rho.width();
    let mut cdf = Vec::with_capacity(rho.dim());
    let mut total = 0.0;
    for p in rho.probabilities() {
        total += p.max(0.0);
        cdf.push(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * total;
        let mut outcome = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        if readout_flip > 0.0 {
            for q in 0..width {
                if rng.random::<f64>() < readout_flip {
                    outcome ^= 1 << (width - 1 - q);
                }
            }
        }
        let v = mean_z_of_outcome(outcome, width);
        sum += v;
        sum_sq += v * v;
    }
    let n = shots as f64;
    let mean = sum / n;
    let stderr = if shots > 1 {
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok((mean, stderr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_outcome_has_zero_error() {
        let rho = DensityMatrix::zero_state(4).unwrap();
        for shots in [1, 7, 1000] {
            assert_eq!(sample_expectation(&rho, shots, 3, 0.0).unwrap(), (1.0, 0.0));
        }
    }

    #[test]
    fn zero_shots_rejected() {
        let rho = DensityMatrix::zero_state(1).unwrap();
        assert!(sample_expectation(&rho, 0, 1, 0.0).is_err());
        assert!(sample_expectation(&rho, 10, 1, 1.5).is_err());
    }

    #[test]
    fn fair_readout_flip_is_unbiased() {
        // Every bit becomes a fair coin; per-shot mean-Z has variance 1/4 for
        // n = 4, so the 3 sigma band at 10^6 shots is 3 * 0.5 / 1000.
        let rho = DensityMatrix::zero_state(4).unwrap();
        let (v, se) = sample_expectation(&rho, 1_000_000, 11, 0.5).unwrap();
        assert!(v.abs() < 3.0 * 0.5 / 1000.0, "v = {v}");
        assert!((se - 0.0005).abs() < 2e-5);
    }

    #[test]
    fn maximally_mixed_concentrates() {
        // Binomial concentration: std of the mean is 0.5/sqrt(8192); the
        // 4/sqrt(8192) band is 8 sigma.
        let rho = DensityMatrix::maximally_mixed(4).unwrap();
        for seed in 0..20 {
            let (v, _) = sample_expectation(&rho, 8192, seed, 0.0).unwrap();
            assert!(v.abs() <= 4.0 / 8192f64.sqrt());
        }
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let rho = DensityMatrix::maximally_mixed(3).unwrap();
        let a = sample_expectation(&rho, 5000, 99, 0.1).unwrap();
        let b = sample_expectation(&rho, 5000, 99, 0.1).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1.to_bits(), b.1.to_bits());
        let c = sample_expectation(&rho, 5000, 100, 0.1).unwrap();
        assert_ne!(a.0.to_bits(), c.0.to_bits());
    }
}
