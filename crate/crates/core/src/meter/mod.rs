//! Entangled two-qubit meter, parallel C-NOT coupling and the readouts built
//! from its outcome statistics.
//!
//! The meter starts in `δ|00> + ε(|01> + |10> + |11>)` with `δ² + 3ε² = 1`
//! and `δ ≥ ε ≥ 0`. Each signal qubit controls a C-NOT onto its own meter
//! qubit. The measurement strength is `δ² − ε²`: 1 is a projective copy of the
//! signal, 0 leaves the signal untouched.

mod povm;
mod visibility;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statekit::{apply, inner, tensor, Ket, Operator, Role, Space};
use crate::weakval::{joint_weak_values, ArmPair};

pub use povm::{
    disturbance_comparison, outcome_probabilities_mixed, outcome_probabilities_with, povm_element, MeterKind,
    PovmElement,
};
pub use visibility::{visibility_closed_form, VisibilityBranch, VisibilityReport};

/// Strengths at or below this are rejected by readout normalization.
pub const ZERO_STRENGTH_TOL: f64 = 1e-9;

const CONSTRAINT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeterConfig {
    delta: f64,
    epsilon: f64,
}

impl MeterConfig {
    /// Solves `δ² − ε² = s`, `δ² + 3ε² = 1`.
    pub fn from_strength(strength: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&strength) || !strength.is_finite() {
            return Err(Error::InvalidMeter(format!("strength {strength} outside [0, 1]")));
        }
        let eps2 = (1.0 - strength) / 4.0;
        let delta2 = (1.0 + 3.0 * strength) / 4.0;
        Ok(MeterConfig { delta: delta2.sqrt(), epsilon: eps2.sqrt() })
    }

    pub fn new(delta: f64, epsilon: f64) -> Result<Self> {
        let c = delta * delta + 3.0 * epsilon * epsilon;
        if (c - 1.0).abs() > CONSTRAINT_TOL {
            return Err(Error::InvalidMeter(format!("delta^2 + 3 eps^2 = {c}, expected 1")));
        }
        if epsilon < 0.0 || delta + CONSTRAINT_TOL < epsilon {
            return Err(Error::InvalidMeter(format!("need delta >= eps >= 0, got ({delta}, {epsilon})")));
        }
        Ok(MeterConfig { delta, epsilon: epsilon.min(delta) })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn strength(&self) -> f64 {
        self.delta * self.delta - self.epsilon * self.epsilon
    }

    fn checked_strength(&self) -> Result<f64> {
        let s = self.strength();
        if s <= ZERO_STRENGTH_TOL {
            return Err(Error::ZeroStrength(s));
        }
        Ok(s)
    }
}

/// Which computation produced a table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    ClosedForm,
    StateVector,
    Circuit,
    MonteCarlo,
}

/// Outcome probabilities `P_m(k,l)` and, once normalized, readouts `R(k,l)`,
/// indexed by the signal basis index `2k + l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutTable {
    pub probabilities: [f64; 4],
    pub readouts: Option<[f64; 4]>,
    pub provenance: Provenance,
}

impl ReadoutTable {
    pub fn probability(&self, pair: ArmPair) -> f64 {
        self.probabilities[pair.index()]
    }

    pub fn readout(&self, pair: ArmPair) -> Option<f64> {
        self.readouts.map(|r| r[pair.index()])
    }

    /// Readouts in `ArmPair::TABLE_ORDER`.
    pub fn readouts_in_table_order(&self) -> Option<[f64; 4]> {
        self.readouts.map(|r| ArmPair::TABLE_ORDER.map(|p| r[p.index()]))
    }

    pub fn max_readout_deviation(&self, other: &ReadoutTable) -> f64 {
        match (self.readouts, other.readouts) {
            (Some(a), Some(b)) => a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
            _ => f64::INFINITY,
        }
    }
}

pub fn meter_state(cfg: &MeterConfig) -> Ket {
    let (d, e) = (cfg.delta, cfg.epsilon);
    Ket::from_real(Space::meter(), &[d, e, e, e]).expect("delta^2 + 3 eps^2 = 1")
}

/// `U_sm`: signal 1 controls meter 1, signal 2 controls meter 2.
pub fn parallel_cnot() -> Operator {
    let a = Operator::cnot(Space::joint(), Role::Signal1, Role::Meter1).expect("roles present");
    let b = Operator::cnot(Space::joint(), Role::Signal2, Role::Meter2).expect("roles present");
    a.compose(&b).expect("same space")
}

pub(crate) fn check_signal(signal: &Ket) -> Result<()> {
    if !signal.space().compatible(&Space::signal()) {
        return Err(Error::SpaceMismatch(format!("expected two signal qubits, got {}", signal.space())));
    }
    if !signal.is_normalized() {
        return Err(Error::NotNormalized(signal.norm_sqr()));
    }
    Ok(())
}

/// `U_sm (|signal> ⊗ |ξ>)`.
pub fn couple(signal: &Ket, cfg: &MeterConfig) -> Result<Ket> {
    check_signal(signal)?;
    let joint = tensor(signal, &meter_state(cfg))?;
    apply(&parallel_cnot(), &joint)
}

fn meter_marginal(joint: &Ket) -> [f64; 4] {
    let mut p = [0.0; 4];
    for (idx, a) in joint.amplitudes().iter().enumerate() {
        p[idx & 3] += a.norm_sqr();
    }
    p
}

/// Probabilities of the meter outcomes `(k,l)` without post-selection.
pub fn outcome_probabilities(signal: &Ket, cfg: &MeterConfig) -> Result<ReadoutTable> {
    let joint = couple(signal, cfg)?;
    Ok(ReadoutTable { probabilities: meter_marginal(&joint), readouts: None, provenance: Provenance::StateVector })
}

/// `R = (P − ε²) / (δ² − ε²)`.
pub fn normalized_readout(table: &ReadoutTable, cfg: &MeterConfig) -> Result<ReadoutTable> {
    let s = cfg.checked_strength()?;
    let e2 = cfg.epsilon * cfg.epsilon;
    Ok(ReadoutTable { readouts: Some(table.probabilities.map(|p| (p - e2) / s)), ..table.clone() })
}

/// Post-selected readout from the weak values:
/// `P(k,l|φ) = |(δ−ε) w_kl + ε|² / [1 − (δ−ε)² ζ]`.
pub fn conditional_readout_closed_form(pre: &Ket, post: &Ket, cfg: &MeterConfig) -> Result<ReadoutTable> {
    cfg.checked_strength()?;
    let w = joint_weak_values(pre, post)?;
    let de = cfg.delta - cfg.epsilon;
    let denom = 1.0 - de * de * w.zeta();
    let probabilities = w.values().map(|wk| (wk * de + cfg.epsilon).norm_sqr() / denom);
    let table = ReadoutTable { probabilities, readouts: None, provenance: Provenance::ClosedForm };
    normalized_readout(&table, cfg)
}

/// Same quantity evaluated on the full 16-amplitude state: couple, project the
/// signal onto `post`, then read the meter.
pub fn conditional_readout_oracle(pre: &Ket, post: &Ket, cfg: &MeterConfig) -> Result<ReadoutTable> {
    cfg.checked_strength()?;
    let ov = inner(post, pre)?;
    if ov.norm() <= crate::weakval::ORTHOGONAL_TOL {
        return Err(Error::OrthogonalSelection(ov.norm()));
    }
    let joint = couple(pre, cfg)?;
    // Unnormalized meter vector left after <post| acts on the signal factor.
    let mut meter = [num_complex::Complex64::new(0.0, 0.0); 4];
    for (idx, a) in joint.amplitudes().iter().enumerate() {
        let signal_idx = idx >> 2;
        meter[idx & 3] += post.amplitude(signal_idx).conj() * a;
    }
    let total: f64 = meter.iter().map(|m| m.norm_sqr()).sum();
    if total <= 0.0 {
        return Err(Error::OrthogonalSelection(0.0));
    }
    let probabilities = meter.map(|m| m.norm_sqr() / total);
    let table = ReadoutTable { probabilities, readouts: None, provenance: Provenance::StateVector };
    normalized_readout(&table, cfg)
}
