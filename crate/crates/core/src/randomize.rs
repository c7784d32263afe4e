//! Seeded ensembles of randomized circuits.
//!
//! A member is a list of auxiliary `GeneralU(theta)` gates plus where they go.
//! Positions and angles are drawn once per member and reused at every
//! `lambda`; only the base circuit's own angles follow `lambda`.
//!
//! Member `r` draws from its own ChaCha stream `(seed, r)`, so growing the
//! ensemble never changes earlier members, and for a fixed seed the angles
//! scale linearly with `delta`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::qsim::{Circuit, CircuitFamily, Gate, AUX_TAG};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// `n_g` gates at uniformly drawn gate boundaries and qubits.
    RandomInsert,
    /// One gate after each single-qubit gate of the base circuit.
    EquipSingles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeMode {
    /// Angles uniform in `[-delta, delta]`.
    Symmetric,
    /// Angles uniform in `[0, delta]`.
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomizationPlan {
    pub strategy: Strategy,
    pub n_g: usize,
    pub delta: f64,
    pub range_mode: RangeMode,
    pub n_r: usize,
    pub seed: u64,
}

impl Default for RandomizationPlan {
    fn default() -> Self {
        RandomizationPlan {
            strategy: Strategy::EquipSingles,
            n_g: 10,
            delta: 0.1,
            range_mode: RangeMode::Positive,
            n_r: 9,
            seed: 42,
        }
    }
}

impl RandomizationPlan {
    pub fn validate(&self) -> Result<()> {
        ensure_finite(self.delta, "delta")?;
        if self.delta < 0.0 {
            return Err(Error::InvalidParameter(format!("delta = {} < 0", self.delta)));
        }
        Ok(())
    }

    fn angle_range(&self) -> (f64, f64) {
        match self.range_mode {
            RangeMode::Symmetric => (-self.delta, self.delta),
            RangeMode::Positive => (0.0, self.delta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    /// Directly after the single-qubit gate at this index of the base circuit.
    Slot { gate: usize },
    /// Before base gate `boundary` (or at the end when `boundary == len`).
    Boundary { boundary: usize, qubit: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    /// 1-based member index.
    pub index: usize,
    pub positions: Vec<Position>,
    pub thetas: Vec<[f64; 3]>,
}

impl EnsembleMember {
    pub fn parameter_count(&self) -> usize {
        self.thetas.len() * 3
    }
}

fn member_rng(seed: u64, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws member `index` (1-based) for a base circuit with this structure.
pub fn generate_member(base: &Circuit, plan: &RandomizationPlan, index: usize) -> Result<EnsembleMember> {
    plan.validate()?;
    let mut rng = member_rng(plan.seed, index);
    let (lo, hi) = plan.angle_range();
    let draw_theta = |rng: &mut ChaCha20Rng| -> [f64; 3] {
        let mut t = [0.0; 3];
        for v in &mut t {
            *v = lo + rng.random::<f64>() * (hi - lo);
        }
        t
    };
    let (positions, thetas) = match plan.strategy {
        Strategy::EquipSingles => {
            let slots = base.single_qubit_slots();
            if slots.len() != plan.n_g {
                return Err(Error::SlotMismatch {
                    expected: plan.n_g,
                    found: slots.len(),
                });
            }
            let thetas = slots.iter().map(|_| draw_theta(&mut rng)).collect();
            (slots.into_iter().map(|gate| Position::Slot { gate }).collect(), thetas)
        }
        Strategy::RandomInsert => {
            let mut positions = Vec::with_capacity(plan.n_g);
            let mut thetas = Vec::with_capacity(plan.n_g);
            for _ in 0..plan.n_g {
                let boundary = rng.random_range(0..=base.len());
                let qubit = rng.random_range(0..base.width());
                positions.push(Position::Boundary { boundary, qubit });
                thetas.push(draw_theta(&mut rng));
            }
            (positions, thetas)
        }
    };
    Ok(EnsembleMember {
        index,
        positions,
        thetas,
    })
}

/// `plan.n_r` members drawn against `base`'s gate structure.
pub fn generate_ensemble(base: &Circuit, plan: &RandomizationPlan) -> Result<Vec<EnsembleMember>> {
    (1..=plan.n_r).map(|r| generate_member(base, plan, r)).collect()
}

/// Splices a member's auxiliary gates into `base`.
pub fn splice_member(base: &Circuit, member: &EnsembleMember) -> Result<Circuit> {
    if member.positions.len() != member.thetas.len() {
        return Err(Error::InvalidParameter(format!(
            "member {} has {} positions but {} angle triples",
            member.index,
            member.positions.len(),
            member.thetas.len()
        )));
    }
    let len = base.len();
    let mut after: Vec<Vec<Gate>> = vec![Vec::new(); len];
    let mut before: Vec<Vec<Gate>> = vec![Vec::new(); len + 1];
    for (pos, t) in member.positions.iter().zip(&member.thetas) {
        match *pos {
            Position::Slot { gate } => {
                let slot = base.gates().get(gate).ok_or_else(|| {
                    Error::InvalidParameter(format!("slot {gate} beyond circuit length {len}"))
                })?;
                if !slot.is_single_qubit() {
                    return Err(Error::InvalidParameter(format!(
                        "slot {gate} is not a single-qubit gate"
                    )));
                }
                after[gate].push(Gate::general_u(slot.qubits[0], t[0], t[1], t[2]).with_tag(AUX_TAG));
            }
            Position::Boundary { boundary, qubit } => {
                if boundary > len {
                    return Err(Error::InvalidParameter(format!(
                        "boundary {boundary} beyond circuit length {len}"
                    )));
                }
                before[boundary].push(Gate::general_u(qubit, t[0], t[1], t[2]).with_tag(AUX_TAG));
            }
        }
    }
    let mut gates = Vec::with_capacity(len + member.thetas.len());
    for (i, g) in base.gates().iter().enumerate() {
        gates.append(&mut before[i]);
        gates.push(g.clone());
        gates.append(&mut after[i]);
    }
    gates.append(&mut before[len]);
    base.with_gates(gates)
}

/// The family's circuit at `lambda` with the member's auxiliary gates.
pub fn realize_member(family: &dyn CircuitFamily, member: &EnsembleMember, lambda: f64) -> Result<Circuit> {
    splice_member(&family.build(lambda)?, member)
}

/// Everything needed to replay an ensemble exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub plan: RandomizationPlan,
    pub members: Vec<EnsembleMember>,
}
