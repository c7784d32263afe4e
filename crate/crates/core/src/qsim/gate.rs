//! Gate set used by the parametric circuits.
//!
//! Every gate is either a fixed Clifford (`H`, `X`, `CX`) or carries real
//! angles (`U1`, `GeneralU`). Angles are the only thing coherent
//! over-rotation noise touches, see [`GateKind::scaled`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tag carried by gates inserted by the circuit randomizer.
pub const AUX_TAG: &str = "aux";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    H,
    X,
    /// Phase gate `diag(1, e^{i phase})`.
    U1 { phase: f64 },
    /// Controlled NOT; `qubits = [control, target]`.
    Cx,
    /// General single-qubit gate
    /// `[[cos(a/2), -e^{i g} sin(a/2)], [e^{i b} sin(a/2), e^{i(b+g)} cos(a/2)]]`.
    ///
    /// `GeneralU(0, 0, 0)` is the identity.
    GeneralU { alpha: f64, beta: f64, gamma: f64 },
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::U1 { .. } => "u1",
            GateKind::Cx => "cx",
            GateKind::GeneralU { .. } => "u",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            GateKind::Cx => 2,
            _ => 1,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            GateKind::U1 { phase } => vec![phase],
            GateKind::GeneralU { alpha, beta, gamma } => vec![alpha, beta, gamma],
            _ => Vec::new(),
        }
    }

    fn from_parts(name: &str, params: &[f64]) -> Result<Self> {
        let expect = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidGate(format!(
                    "{name} takes {n} parameters, got {}",
                    params.len()
                )))
            }
        };
        let kind = match name {
            "h" => {
                expect(0)?;
                GateKind::H
            }
            "x" => {
                expect(0)?;
                GateKind::X
            }
            "u1" => {
                expect(1)?;
                GateKind::U1 { phase: params[0] }
            }
            "cx" => {
                expect(0)?;
                GateKind::Cx
            }
            "u" => {
                expect(3)?;
                GateKind::GeneralU {
                    alpha: params[0],
                    beta: params[1],
                    gamma: params[2],
                }
            }
            other => return Err(Error::InvalidGate(format!("unknown gate kind '{other}'"))),
        };
        Ok(kind)
    }

    /// Multiplies every angle by `factor`; angle-free gates are unchanged.
    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            GateKind::U1 { phase } => GateKind::U1 {
                phase: phase * factor,
            },
            GateKind::GeneralU { alpha, beta, gamma } => GateKind::GeneralU {
                alpha: alpha * factor,
                beta: beta * factor,
                gamma: gamma * factor,
            },
            other => other,
        }
    }

    pub fn inverse(&self) -> Self {
        match *self {
            GateKind::U1 { phase } => GateKind::U1 { phase: -phase },
            GateKind::GeneralU { alpha, beta, gamma } => GateKind::GeneralU {
                alpha: -alpha,
                beta: -gamma,
                gamma: -beta,
            },
            other => other,
        }
    }

    /// True when every angle is exactly zero for an angle-carrying gate.
    pub fn is_exact_identity(&self) -> bool {
        match *self {
            GateKind::U1 { phase } => phase == 0.0,
            GateKind::GeneralU { alpha, beta, gamma } => {
                alpha == 0.0 && beta == 0.0 && gamma == 0.0
            }
            _ => false,
        }
    }

    /// Dense matrix in the local basis; for `Cx` the basis is `|control target>`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        match *self {
            GateKind::H => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
            }
            GateKind::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            GateKind::U1 { phase } => {
                DMatrix::from_row_slice(2, 2, &[o, z, z, Complex64::from_polar(1.0, phase)])
            }
            GateKind::Cx => DMatrix::from_row_slice(
                4,
                4,
                &[o, z, z, z, z, o, z, z, z, z, z, o, z, z, o, z],
            ),
            GateKind::GeneralU { alpha, beta, gamma } => {
                let (s, co) = (alpha / 2.0).sin_cos();
                DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        c(co, 0.0),
                        -Complex64::from_polar(s, gamma),
                        Complex64::from_polar(s, beta),
                        Complex64::from_polar(co, beta + gamma),
                    ],
                )
            }
        }
    }
}

/// A gate bound to qubits, optionally labelled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GateRecord", into = "GateRecord")]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub tag: Option<String>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Result<Self> {
        let gate = Gate {
            kind,
            qubits,
            tag: None,
        };
        gate.validate()?;
        Ok(gate)
    }

    pub fn h(q: usize) -> Self {
        Gate::single(GateKind::H, q)
    }

    pub fn x(q: usize) -> Self {
        Gate::single(GateKind::X, q)
    }

    pub fn u1(q: usize, phase: f64) -> Self {
        Gate::single(GateKind::U1 { phase }, q)
    }

    pub fn general_u(q: usize, alpha: f64, beta: f64, gamma: f64) -> Self {
        Gate::single(GateKind::GeneralU { alpha, beta, gamma }, q)
    }

    /// Real rotation about Y: `GeneralU(angle, 0, 0)`.
    pub fn ry(q: usize, angle: f64) -> Self {
        Gate::general_u(q, angle, 0.0, 0.0)
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Gate {
            kind: GateKind::Cx,
            qubits: vec![control, target],
            tag: None,
        }
    }

    fn single(kind: GateKind, q: usize) -> Self {
        Gate {
            kind,
            qubits: vec![q],
            tag: None,
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }

    pub fn is_single_qubit(&self) -> bool {
        self.qubits.len() == 1
    }

    pub fn is_auxiliary(&self) -> bool {
        self.tag.as_deref() == Some(AUX_TAG)
    }

    pub fn inverse(&self) -> Self {
        Gate {
            kind: self.kind.inverse(),
            qubits: self.qubits.clone(),
            tag: self.tag.clone(),
        }
    }

    /// Structural checks that do not depend on the circuit width.
    pub fn validate(&self) -> Result<()> {
        if self.qubits.len() != self.kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{} acts on {} qubit(s), got {:?}",
                self.kind.name(),
                self.kind.arity(),
                self.qubits
            )));
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::InvalidGate(format!(
                "repeated qubit in {:?}",
                self.qubits
            )));
        }
        for p in self.kind.params() {
            if !p.is_finite() {
                return Err(Error::NonFinite(format!("{} angle", self.kind.name())));
            }
        }
        Ok(())
    }
}

/// Wire form `{kind, qubits, params, tag}` used in circuit JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateRecord {
    kind: String,
    qubits: Vec<usize>,
    #[serde(default)]
    params: Vec<f64>,
    #[serde(default)]
    tag: Option<String>,
}

impl TryFrom<GateRecord> for Gate {
    type Error = Error;

    fn try_from(rec: GateRecord) -> Result<Self> {
        let kind = GateKind::from_parts(&rec.kind, &rec.params)?;
        let gate = Gate {
            kind,
            qubits: rec.qubits,
            tag: rec.tag,
        };
        gate.validate()?;
        Ok(gate)
    }
}

impl From<Gate> for GateRecord {
    fn from(gate: Gate) -> Self {
        GateRecord {
            kind: gate.kind.name().to_string(),
            params: gate.kind.params(),
            qubits: gate.qubits,
            tag: gate.tag,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unitarity_defect(m: &DMatrix<Complex64>) -> f64 {
        let prod = m.adjoint() * m;
        let id = DMatrix::<Complex64>::identity(m.nrows(), m.ncols());
        (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn every_kind_is_unitary() {
        let kinds = [
            GateKind::H,
            GateKind::X,
            GateKind::Cx,
            GateKind::U1 { phase: 0.37 },
            GateKind::GeneralU {
                alpha: 1.1,
                beta: -0.4,
                gamma: 2.9,
            },
        ];
        for k in kinds {
            assert!(unitarity_defect(&k.matrix()) < 1e-12, "{k:?}");
        }
    }

    #[test]
    fn general_u_at_zero_is_identity() {
        let m = GateKind::GeneralU {
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
        }
        .matrix();
        assert_eq!(m, DMatrix::identity(2, 2));
    }

    #[test]
    fn general_u_alpha_is_a_y_rotation() {
        let a = 0.8;
        let m = GateKind::GeneralU {
            alpha: a,
            beta: 0.0,
            gamma: 0.0,
        }
        .matrix();
        assert!((m[(0, 0)].re - (a / 2.0).cos()).abs() < 1e-15);
        assert!((m[(0, 1)].re + (a / 2.0).sin()).abs() < 1e-15);
        assert!((m[(1, 0)].re - (a / 2.0).sin()).abs() < 1e-15);
        assert!((m[(1, 1)].re - (a / 2.0).cos()).abs() < 1e-15);
    }

    #[test]
    fn general_u_pi_is_x_up_to_sign() {
        let m = GateKind::GeneralU {
            alpha: PI,
            beta: 0.0,
            gamma: 0.0,
        }
        .matrix();
        assert!(m[(0, 0)].norm() < 1e-15 && m[(1, 1)].norm() < 1e-15);
        assert!((m[(1, 0)].re - 1.0).abs() < 1e-15);
        assert!((m[(0, 1)].re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_matrix_is_adjoint() {
        for k in [
            GateKind::U1 { phase: 1.3 },
            GateKind::GeneralU {
                alpha: 0.3,
                beta: 1.7,
                gamma: -0.6,
            },
            GateKind::H,
            GateKind::Cx,
        ] {
            let diff = k.inverse().matrix() - k.matrix().adjoint();
            assert!(diff.iter().all(|z| z.norm() < 1e-14), "{k:?}");
        }
    }

    #[test]
    fn rejects_bad_gates() {
        assert!(Gate::new(GateKind::Cx, vec![1, 1]).is_err());
        assert!(Gate::new(GateKind::H, vec![0, 1]).is_err());
        assert!(Gate::new(GateKind::U1 { phase: f64::NAN }, vec![0]).is_err());
    }

    #[test]
    fn json_wire_form() {
        let g = Gate::general_u(2, 0.1, 0.2, 0.3).with_tag(AUX_TAG);
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"u","qubits":[2],"params":[0.1,0.2,0.3],"tag":"aux"}"#
        );
        let back: Gate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<Gate>(r#"{"kind":"u","qubits":[0],"params":[1]}"#).is_err());
        assert!(serde_json::from_str::<Gate>(r#"{"kind":"swap","qubits":[0,1]}"#).is_err());
    }
}
