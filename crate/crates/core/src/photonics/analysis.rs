use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::circuit::{bright_port, outer_path, overlap_path, rail_modes, rail_modes_pol, HardyCircuit};
use super::element::transfer_matrix;
use super::mode::{AnalyzerSetting, Pol, Sign, Tag};
use crate::error::{Error, Result};
use crate::meter::{normalized_readout, MeterConfig, Provenance, ReadoutTable};
use crate::statekit::{Ket, Space};

/// Minimum number of points in a fringe scan.
pub const MIN_FRINGE_POINTS: usize = 8;

/// Interference imperfections evaluated by the circuit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Two-photon overlap at BS3: the weight of the indistinguishable
    /// component, equal to the HOM dip visibility.
    pub hom_overlap: f64,
    /// Single-photon fringe visibility of each interferometer, realized as a
    /// symmetric phase jitter `±acos(v)`.
    pub single_photon_visibility: f64,
}

impl NoiseModel {
    pub const IDEAL: NoiseModel = NoiseModel { hom_overlap: 1.0, single_photon_visibility: 1.0 };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("hom_overlap", self.hom_overlap), ("single_photon_visibility", self.single_photon_visibility)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidScenario(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// `(weight, offset1, offset2)` for the dephasing average.
    fn jitter(&self) -> Vec<(f64, f64, f64)> {
        if self.single_photon_visibility >= 1.0 {
            return vec![(1.0, 0.0, 0.0)];
        }
        let a = self.single_photon_visibility.acos();
        let mut out = Vec::with_capacity(4);
        for s1 in [-a, a] {
            for s2 in [-a, a] {
                out.push((0.25, s1, s2));
            }
        }
        out
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::IDEAL
    }
}

/// Coincidence probability at the two outputs of a balanced splitter for two
/// photons with polarization overlap `overlap`.
pub fn hom_coincidence(overlap: f64) -> f64 {
    (1.0 - overlap.clamp(0.0, 1.0)) / 2.0
}

/// Normalized signal ket at the coupling region and the norm of its
/// one-photon-per-interferometer component.
pub fn preselected_state(circuit: &HardyCircuit) -> Result<(Ket, f64)> {
    circuit.require_calibration()?;
    let layout = circuit.layout();
    let input = circuit.polarized_input(Pol::H)?;
    let front = circuit.prefix_through("BS3");
    let state = super::element::propagate(&input, front, circuit.convention())?;
    let mut amps = vec![Complex64::new(0.0, 0.0); 4];
    for (idx, amp) in amps.iter_mut().enumerate() {
        let p = signal_path(1, idx >> 1);
        let q = signal_path(2, idx & 1);
        *amp = state.amplitude(layout.mode(Tag::First, p, Pol::H)?, layout.mode(Tag::First, q, Pol::H)?);
    }
    let ket = Ket::unnormalized(Space::signal(), amps)?;
    let scale = ket.norm();
    Ok((ket.normalize()?, scale))
}

/// Signal ket whose overlap with the (unnormalized) preselected component is
/// the C1∧C2 coincidence amplitude.
pub fn postselection_projector(circuit: &HardyCircuit) -> Result<Ket> {
    circuit.require_calibration()?;
    let layout = circuit.layout();
    let back = circuit.without_meter();
    let u = transfer_matrix(back.suffix_from("CAL1"), &layout, circuit.convention())?;
    let row = |photon: u8, arm: usize| -> Result<Complex64> {
        let det = layout.index(layout.mode(Tag::First, bright_port(photon), Pol::H)?);
        let src = layout.index(layout.mode(Tag::First, signal_path(photon, arm), Pol::H)?);
        Ok(u[(det, src)])
    };
    let mut amps = Vec::with_capacity(4);
    for idx in 0..4 {
        amps.push((row(1, idx >> 1)? * row(2, idx & 1)?).conj());
    }
    Ket::unnormalized(Space::signal(), amps)?.normalize()
}

fn signal_path(photon: u8, bit: usize) -> &'static str {
    if bit == 0 {
        outer_path(photon)
    } else {
        overlap_path(photon)
    }
}

/// Absolute C1∧C2 coincidence probability per analyzer setting, indexed by
/// `AnalyzerSetting::index`.
pub fn coincidence_probabilities(circuit: &HardyCircuit, meter: &Ket, noise: &NoiseModel) -> Result<[f64; 4]> {
    noise.validate()?;
    let layout = circuit.layout();
    let pol = |s: Sign| if s == Sign::Plus { Pol::H } else { Pol::V };
    let mut detectors = Vec::with_capacity(4);
    for a in AnalyzerSetting::ALL {
        detectors.push((
            rail_modes_pol(&layout, bright_port(1), pol(a.first))?,
            rail_modes_pol(&layout, bright_port(2), pol(a.second))?,
        ));
    }
    let mut out = [0.0; 4];
    let base = circuit.phase_offsets();
    let components: Vec<(f64, bool)> = [(noise.hom_overlap, false), (1.0 - noise.hom_overlap, true)]
        .into_iter()
        .filter(|(w, _)| *w > 0.0)
        .collect();
    for (w_tag, distinguishable) in components {
        let input = circuit.input_state(meter, distinguishable)?;
        for (w_j, d1, d2) in noise.jitter() {
            let c = circuit.with_phase_offset(1, base[0] + d1).with_phase_offset(2, base[1] + d2);
            let state = c.propagate(&input)?;
            for (o, (m1, m2)) in out.iter_mut().zip(&detectors) {
                *o += w_tag * w_j * state.joint_probability(m1, m2);
            }
        }
    }
    Ok(out)
}

/// Probability that both photons reach C1 and C2 regardless of polarization.
pub fn coincidence_probability(circuit: &HardyCircuit, meter: &Ket, noise: &NoiseModel) -> Result<f64> {
    Ok(coincidence_probabilities(circuit, meter, noise)?.iter().sum())
}

/// Readouts computed from circuit coincidences: `P(k,l|C1∧C2)` normalized by
/// `(P − ε²)/(δ² − ε²)`.
pub fn circuit_readouts(circuit: &HardyCircuit, cfg: &MeterConfig, noise: &NoiseModel) -> Result<ReadoutTable> {
    circuit.require_calibration()?;
    let p = coincidence_probabilities(circuit, &crate::meter::meter_state(cfg), noise)?;
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return Err(Error::OrthogonalSelection(total));
    }
    let table = ReadoutTable { probabilities: p.map(|x| x / total), readouts: None, provenance: Provenance::Circuit };
    normalized_readout(&table, cfg)
}

/// Which outcome a fringe visibility is computed for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FringeBasis {
    Outcome(AnalyzerSetting),
    /// Count-weighted over the four settings: `Σ(max − min) / Σ(max + min)`.
    Average,
}

/// Coincidence probabilities per analyzer setting at each scanned phase.
/// Blocking `O2` scans the phase of interferometer 1 and vice versa.
pub fn fringe_curves(
    circuit: &HardyCircuit,
    meter: &Ket,
    blocked_arm: &str,
    grid: &[f64],
    noise: &NoiseModel,
) -> Result<Vec<[f64; 4]>> {
    circuit.require_calibration()?;
    let scanned = match blocked_arm {
        "O2" => 1u8,
        "O1" => 2u8,
        other => return Err(Error::UnknownLabel(format!("blocked arm must be O1 or O2, got {other}"))),
    };
    if grid.len() < MIN_FRINGE_POINTS {
        return Err(Error::GridTooShort(grid.len()));
    }
    let blocked = circuit.with_block(blocked_arm)?;
    grid.iter()
        .map(|&phi| coincidence_probabilities(&blocked.with_phase_offset(scanned, phi), meter, noise))
        .collect()
}

pub fn visibility_of_curves(curves: &[[f64; 4]], basis: FringeBasis) -> f64 {
    let extremes = |b: usize| {
        curves.iter().map(|c| c[b]).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    };
    let bases: Vec<usize> = match basis {
        FringeBasis::Outcome(a) => vec![a.index()],
        FringeBasis::Average => (0..4).collect(),
    };
    let (mut num, mut den) = (0.0, 0.0);
    for b in bases {
        let (lo, hi) = extremes(b);
        num += hi - lo;
        den += hi + lo;
    }
    if den <= 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `(max − min)/(max + min)` of the coincidence fringe over `grid`.
pub fn fringe_scan(
    circuit: &HardyCircuit,
    meter: &Ket,
    blocked_arm: &str,
    grid: &[f64],
    basis: FringeBasis,
    noise: &NoiseModel,
) -> Result<f64> {
    Ok(visibility_of_curves(&fringe_curves(circuit, meter, blocked_arm, grid, noise)?, basis))
}

/// `n` equally spaced phases covering one period, starting at 0.
pub fn uniform_phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 * std::f64::consts::TAU / n as f64).collect()
}

/// Probability that any photon reaches `Cn`, for diagnostics.
pub fn bright_port_probability(circuit: &HardyCircuit, meter: &Ket, photon: u8) -> Result<f64> {
    let out = circuit.propagate(&circuit.input_state(meter, false)?)?;
    Ok(out.occupation_probability(&rail_modes(&circuit.layout(), bright_port(photon))?))
}
