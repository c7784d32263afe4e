use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gate::Gate;
use super::ops;
use crate::error::{ensure_finite, Error, Result};

/// Dense-matrix guard for unitaries and density matrices.
pub const MAX_DENSE_WIDTH: usize = 12;

/// Ordered gate list over `width` qubits, built at a given `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitRecord")]
pub struct Circuit {
    width: usize,
    lambda: f64,
    gates: Vec<Gate>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitRecord {
    width: usize,
    lambda: f64,
    gates: Vec<Gate>,
}

impl TryFrom<CircuitRecord> for Circuit {
    type Error = Error;

    fn try_from(rec: CircuitRecord) -> Result<Self> {
        let mut circuit = Circuit::new(rec.width, rec.lambda)?;
        for g in rec.gates {
            circuit.push(g)?;
        }
        Ok(circuit)
    }
}

impl Circuit {
    pub fn new(width: usize, lambda: f64) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidParameter("circuit width must be >= 1".into()));
        }
        ensure_finite(lambda, "circuit lambda")?;
        Ok(Circuit {
            width,
            lambda,
            gates: Vec::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate()?;
        if let Some(&q) = gate.qubits.iter().find(|&&q| q >= self.width) {
            return Err(Error::InvalidGate(format!(
                "qubit {q} out of range for width {}",
                self.width
            )));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.push(g))
    }

    /// Same width and lambda, different gate list. Gates are re-validated.
    pub fn with_gates(&self, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Circuit::new(self.width, self.lambda)?;
        c.extend(gates)?;
        Ok(c)
    }

    /// Positions of single-qubit gates that are not auxiliary.
    pub fn single_qubit_slots(&self) -> Vec<usize> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.is_single_qubit() && !g.is_auxiliary())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn auxiliary_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_auxiliary()).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Product of the embedded ideal gate matrices in application order.
pub fn circuit_unitary(circuit: &Circuit) -> Result<DMatrix<Complex64>> {
    let width = circuit.width();
    if width > MAX_DENSE_WIDTH {
        return Err(Error::WidthGuard {
            width,
            max: MAX_DENSE_WIDTH,
        });
    }
    let dim = 1usize << width;
    let mut u = DMatrix::<Complex64>::identity(dim, dim);
    for gate in circuit.gates() {
        ops::apply_left(&mut u, &gate.kind.matrix(), &gate.qubits, width);
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = Circuit::new(3, 1.0).unwrap();
        let u = circuit_unitary(&c).unwrap();
        assert_eq!(u, DMatrix::identity(8, 8));
    }

    #[test]
    fn single_h_is_hadamard() {
        let mut c = Circuit::new(1, 0.0).unwrap();
        c.push(Gate::h(0)).unwrap();
        let u = circuit_unitary(&c).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expect = DMatrix::from_row_slice(
            2,
            2,
            &[s, s, s, -s].map(|v| Complex64::new(v, 0.0)),
        );
        assert!(max_abs(&(u - expect)) < 1e-15);
    }

    #[test]
    fn embedding_matches_kronecker_product() {
        // H on qubit 1 of 3 equals I (x) H (x) I with qubit 0 most significant.
        let mut c = Circuit::new(3, 0.0).unwrap();
        c.push(Gate::h(1)).unwrap();
        let u = circuit_unitary(&c).unwrap();
        let id = DMatrix::<Complex64>::identity(2, 2);
        let h = crate::qsim::GateKind::H.matrix();
        let expect = id.kronecker(&h).kronecker(&id);
        assert!(max_abs(&(u - expect)) < 1e-15);
    }

    #[test]
    fn cx_control_is_first_qubit() {
        let mut c = Circuit::new(2, 0.0).unwrap();
        c.push(Gate::cx(1, 0)).unwrap();
        let u = circuit_unitary(&c).unwrap();
        // |01> (q1 = 1) -> |11>
        assert!((u[(3, 1)].re - 1.0).abs() < 1e-15);
        assert!((u[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!((u[(2, 2)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn width_guard() {
        let c = Circuit::new(MAX_DENSE_WIDTH + 1, 0.0).unwrap();
        assert!(matches!(circuit_unitary(&c), Err(Error::WidthGuard { .. })));
        assert!(Circuit::new(0, 0.0).is_err());
    }

    #[test]
    fn rejects_out_of_range_qubits() {
        let mut c = Circuit::new(2, 0.0).unwrap();
        assert!(c.push(Gate::x(2)).is_err());
        assert!(c.push(Gate::cx(0, 5)).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let mut c = Circuit::new(2, 1.5).unwrap();
        c.extend([Gate::h(0), Gate::cx(0, 1), Gate::u1(1, -0.25)]).unwrap();
        let back = Circuit::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        let bad = r#"{"width":1,"lambda":1.0,"gates":[{"kind":"cx","qubits":[0,1]}]}"#;
        assert!(Circuit::from_json(bad).is_err());
        let extra = r#"{"width":1,"lambda":1.0,"gates":[],"depth":3}"#;
        assert!(Circuit::from_json(extra).is_err());
    }
}
