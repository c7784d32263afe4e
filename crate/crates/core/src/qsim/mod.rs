//! Gate-level parametric circuits and an exact density-matrix simulator.

mod circuit;
mod density;
mod estimator;
mod family;
mod gate;
mod noise;
mod ops;
mod sampling;

pub use circuit::{circuit_unitary, Circuit, MAX_DENSE_WIDTH};
pub use estimator::{derive_seed, Estimator};
pub use family::CircuitFamily;
pub use density::{apply_circuit, expect_mean_z, DensityMatrix};
pub use gate::{Gate, GateKind, AUX_TAG};
pub use noise::{amplitude_damping_kraus, completeness_defect, depolarizing_kraus, NoiseModel};
pub use sampling::sample_expectation;

/// Noisy simulation from `|0...0>` followed by exact mean-Z readout.
///
/// Readout flips enter analytically: an independent flip with probability
/// `f` on every bit maps each `<Z_i>` to `(1 - 2f) <Z_i>`.
pub fn simulate_mean_z(circuit: &Circuit, noise: &NoiseModel) -> crate::Result<f64> {
    let rho0 = DensityMatrix::zero_state(circuit.width())?;
    let rho = apply_circuit(&rho0, circuit, noise)?;
    Ok((1.0 - 2.0 * noise.readout_flip) * expect_mean_z(&rho))
}

/// Like [`simulate_mean_z`] but estimated from `shots` measurements.
/// Returns `(mean, stderr)`.
pub fn simulate_mean_z_shots(circuit: &Circuit, noise: &NoiseModel, shots: u64, seed: u64) -> crate::Result<(f64, f64)> {
    let rho0 = DensityMatrix::zero_state(circuit.width())?;
    let rho = apply_circuit(&rho0, circuit, noise)?;
    sample_expectation(&rho, shots, seed, noise.readout_flip)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_readout_matches_sampled() {
        let mut c = Circuit::new(2, 0.0).unwrap();
        c.push(Gate::ry(0, 0.7)).unwrap();
        let noise = NoiseModel {
            readout_flip: 0.1,
            ..NoiseModel::ideal()
        };
        let exact = simulate_mean_z(&c, &noise).unwrap();
        let ideal = simulate_mean_z(&c, &NoiseModel::ideal()).unwrap();
        assert!((exact - 0.8 * ideal).abs() < 1e-14);
        let (m, se) = simulate_mean_z_shots(&c, &noise, 200_000, 5).unwrap();
        assert!((m - exact).abs() < 5.0 * se, "{m} vs {exact} (se {se})");
    }
}
