use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_signal, meter_state, parallel_cnot, MeterConfig, Provenance, ReadoutTable};
use crate::error::Result;
use crate::statekit::{fidelity, Density, Ket, Operator, Role, Space};
use crate::weakval::ArmPair;

/// Generalized measurement element on the signal qubits.
#[derive(Clone, Debug)]
pub struct PovmElement {
    pub outcome: ArmPair,
    pub operator: Operator,
}

/// `Π_kl = (δ² − ε²)|kl><kl| + ε² I`.
pub fn povm_element(outcome: ArmPair, cfg: &MeterConfig) -> PovmElement {
    let e2 = cfg.epsilon() * cfg.epsilon();
    let mut m = DMatrix::from_diagonal_element(4, 4, Complex64::new(e2, 0.0));
    m[(outcome.index(), outcome.index())] += Complex64::new(cfg.strength(), 0.0);
    PovmElement { outcome, operator: Operator::hermitian(Space::signal(), m).expect("real diagonal") }
}

/// How the meter qubits are initialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeterKind {
    /// The pure state `δ|00> + ε(|01> + |10> + |11>)`.
    Entangled,
    /// Classical mixture of `|00>, |01>, |10>, |11>` with weights `(δ², ε², ε², ε²)`.
    Separable,
}

fn meter_density(cfg: &MeterConfig, kind: MeterKind) -> Density {
    match kind {
        MeterKind::Entangled => Density::pure(&meter_state(cfg)).expect("normalized"),
        MeterKind::Separable => {
            let (d2, e2) = (cfg.delta().powi(2), cfg.epsilon().powi(2));
            let terms: Vec<(f64, Ket)> = [d2, e2, e2, e2]
                .iter()
                .enumerate()
                .map(|(i, &w)| (w, Ket::basis_state(Space::meter(), i).expect("index < 4")))
                .collect();
            Density::mixture(&terms).expect("weights sum to one")
        }
    }
}

fn coupled_density(rho: &Density, cfg: &MeterConfig, kind: MeterKind) -> Result<Density> {
    rho.tensor(&meter_density(cfg, kind))?.evolve(&parallel_cnot())
}

/// Outcome probabilities for a mixed signal, entangled meter.
pub fn outcome_probabilities_mixed(rho: &Density, cfg: &MeterConfig) -> Result<ReadoutTable> {
    let joint = coupled_density(rho, cfg, MeterKind::Entangled)?;
    let meter = joint.partial_trace(&[Role::Meter1, Role::Meter2])?;
    let probabilities = [0, 1, 2, 3].map(|i| meter.matrix()[(i, i)].re);
    Ok(ReadoutTable { probabilities, readouts: None, provenance: Provenance::StateVector })
}

/// Outcome probabilities for a pure signal and either kind of meter.
pub fn outcome_probabilities_with(signal: &Ket, cfg: &MeterConfig, kind: MeterKind) -> Result<ReadoutTable> {
    check_signal(signal)?;
    let joint = coupled_density(&Density::pure(signal)?, cfg, kind)?;
    let meter = joint.partial_trace(&[Role::Meter1, Role::Meter2])?;
    let probabilities = [0, 1, 2, 3].map(|i| meter.matrix()[(i, i)].re);
    Ok(ReadoutTable { probabilities, readouts: None, provenance: Provenance::StateVector })
}

/// Fidelity between the input signal and the signal after coupling, with the
/// meter traced out and no outcome selected.
pub fn disturbance_comparison(signal: &Ket, cfg: &MeterConfig, kind: MeterKind) -> Result<f64> {
    check_signal(signal)?;
    let before = Density::pure(signal)?;
    let after = coupled_density(&before, cfg, kind)?.partial_trace(&[Role::Signal1, Role::Signal2])?;
    fidelity(&before, &after)
}
