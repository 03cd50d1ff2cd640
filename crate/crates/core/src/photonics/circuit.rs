use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::element::{propagate, CircuitElement, SplitterConvention};
use super::mode::{Mode, ModeLayout, Pol, Sign, Tag};
use super::state::TwoPhotonState;
use crate::error::{Error, Result};
use crate::statekit::{Ket, Space};

/// Rail names. Photon `n` enters on `NOn` before its input splitter; after the
/// output splitters `NOn` is the `Cn` detector rail and `On` the `Dn` rail.
pub const PATHS: [&str; 6] = ["NO1", "O1", "DUMP1", "NO2", "O2", "DUMP2"];

/// `(name, a, b)` of the seven splitters in propagation order.
const SPLITTERS: [(&str, &str, &str); 7] = [
    ("BS1", "NO1", "O1"),
    ("BS2", "NO2", "O2"),
    ("BAL1", "NO1", "DUMP1"),
    ("BAL2", "NO2", "DUMP2"),
    ("BS3", "O1", "O2"),
    ("OUT1", "NO1", "O1"),
    ("OUT2", "NO2", "O2"),
];

/// Readout half-wave angle that sends `|+>` to H and `|->` to V.
pub const READOUT_ANGLE: f64 = std::f64::consts::PI / 8.0;

/// Dark-port residual accepted by calibration.
pub const DARK_PORT_TOL: f64 = 1e-18;

pub fn outer_path(photon: u8) -> &'static str {
    if photon == 1 {
        "NO1"
    } else {
        "NO2"
    }
}

pub fn overlap_path(photon: u8) -> &'static str {
    if photon == 1 {
        "O1"
    } else {
        "O2"
    }
}

/// Detector rail `Cn`.
pub fn bright_port(photon: u8) -> &'static str {
    outer_path(photon)
}

/// Hardy's double interferometer, stored as an ordered element list.
///
/// Element order: input splitters, reference phases on the overlapping arms,
/// balancing splitters on the outer arms, BS3, the C-NOT half-wave plates on
/// O1/O2, calibration phases on NO1/NO2, output splitters, readout half-wave
/// plates on the C rails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyCircuit {
    convention: SplitterConvention,
    elements: Vec<CircuitElement>,
    /// Dark-port phases for CAL1/CAL2; `None` until calibrated.
    calibration: Option<[f64; 2]>,
    /// Scan offsets added on top of the calibration phases.
    offsets: [f64; 2],
}

impl Default for HardyCircuit {
    fn default() -> Self {
        HardyCircuit::standard(SplitterConvention::default())
    }
}

impl HardyCircuit {
    /// Uncalibrated circuit for `convention`. The reference phases make the
    /// overlapping-arm amplitude real and positive after each input splitter.
    pub fn standard(convention: SplitterConvention) -> Self {
        let rho = -convention.reflection().arg();
        let elements = vec![
            CircuitElement::beamsplitter("BS1", "NO1", "O1"),
            CircuitElement::beamsplitter("BS2", "NO2", "O2"),
            CircuitElement::phase("REF1", "O1", rho),
            CircuitElement::phase("REF2", "O2", rho),
            CircuitElement::beamsplitter("BAL1", "NO1", "DUMP1"),
            CircuitElement::beamsplitter("BAL2", "NO2", "DUMP2"),
            CircuitElement::beamsplitter("BS3", "O1", "O2"),
            CircuitElement::halfwave("HWP4", "O1", 0.0),
            CircuitElement::halfwave("HWP5", "O2", 0.0),
            CircuitElement::phase("CAL1", "NO1", 0.0),
            CircuitElement::phase("CAL2", "NO2", 0.0),
            CircuitElement::beamsplitter("OUT1", "NO1", "O1"),
            CircuitElement::beamsplitter("OUT2", "NO2", "O2"),
            CircuitElement::halfwave("READ1", "NO1", READOUT_ANGLE),
            CircuitElement::halfwave("READ2", "NO2", READOUT_ANGLE),
        ];
        HardyCircuit { convention, elements, calibration: None, offsets: [0.0; 2] }
    }

    /// Standard circuit with default convention, already calibrated.
    pub fn calibrated() -> Self {
        HardyCircuit::default().calibrate_dark_ports().expect("default convention admits a dark port")
    }

    pub fn convention(&self) -> &SplitterConvention {
        &self.convention
    }

    pub fn elements(&self) -> &[CircuitElement] {
        &self.elements
    }

    pub fn layout(&self) -> ModeLayout {
        ModeLayout::new(PATHS).expect("distinct path names")
    }

    pub fn is_calibrated(&self) -> bool {
        self.calibration.is_some()
    }

    pub fn calibration_phases(&self) -> Option<[f64; 2]> {
        self.calibration
    }

    /// Angles of the C-NOT plates HWP4 and HWP5.
    pub fn meter_hwp_angles(&self) -> [f64; 2] {
        let angle = |n: &str| match self.find(n).map(|i| &self.elements[i]) {
            Some(CircuitElement::Halfwave { angle, .. }) => *angle,
            _ => f64::NAN,
        };
        [angle("HWP4"), angle("HWP5")]
    }

    fn find(&self, name: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.name() == name)
    }

    fn phase_of(&self, name: &str) -> Result<f64> {
        match self.find(name).map(|i| &self.elements[i]) {
            Some(CircuitElement::Phase { radians, .. }) => Ok(*radians),
            _ => Err(Error::NoSolution(format!("missing phase element {name}"))),
        }
    }

    fn set_phase(&mut self, name: &str, value: f64) {
        if let Some(i) = self.find(name) {
            if let CircuitElement::Phase { radians, .. } = &mut self.elements[i] {
                *radians = value;
            }
        }
    }

    /// Checks the splitter sequence and the presence of the phase elements
    /// calibration relies on.
    pub fn validate_topology(&self) -> Result<()> {
        let splitters: Vec<(&str, &str, &str)> = self
            .elements
            .iter()
            .filter_map(|e| match e {
                CircuitElement::Beamsplitter { name, a, b } => Some((name.as_str(), a.as_str(), b.as_str())),
                _ => None,
            })
            .collect();
        if splitters != SPLITTERS {
            return Err(Error::NoSolution(format!("unexpected splitter sequence {splitters:?}")));
        }
        let layout = self.layout();
        for e in &self.elements {
            e.transfer(&layout, &self.convention)?;
        }
        let pos = |n: &str| self.find(n).ok_or_else(|| Error::NoSolution(format!("missing element {n}")));
        for (photon, (reference, input, cal, out)) in
            [("REF1", "BS1", "CAL1", "OUT1"), ("REF2", "BS2", "CAL2", "OUT2")].into_iter().enumerate()
        {
            let (r, i, c, o, bs3) = (pos(reference)?, pos(input)?, pos(cal)?, pos(out)?, pos("BS3")?);
            if !(i < r && r < bs3 && bs3 < c && c < o) {
                return Err(Error::NoSolution(format!("phase elements of interferometer {} out of order", photon + 1)));
            }
            self.phase_of(reference)?;
            self.phase_of(cal)?;
        }
        Ok(())
    }

    /// Sets CAL1/CAL2 so that C1 (C2) is dark whenever the other photon is
    /// confined to its outer arm.
    ///
    /// With the other overlapping arm blocked, the C1 amplitude is
    /// `t³ e^{iθ} + r² t e^{iρ}` (outer path through BS1, BAL1, OUT1; overlapping
    /// path through BS1, REF1, BS3, OUT1). It vanishes iff the two magnitudes
    /// agree, at `θ = arg(−r² e^{iρ} / t²)`. The result is then checked by
    /// two-photon propagation without the meter plates.
    pub fn calibrate_dark_ports(&self) -> Result<HardyCircuit> {
        self.validate_topology()?;
        self.convention.validate()?;
        let (t, r) = (self.convention.transmission(), self.convention.reflection());
        let mut out = self.clone();
        let mut phases = [0.0; 2];
        for (k, reference) in ["REF1", "REF2"].iter().enumerate() {
            let rho = self.phase_of(reference)?;
            let a_outer = t * t * t;
            let a_overlap = r * r * t * Complex64::from_polar(1.0, rho);
            if (a_outer.norm() - a_overlap.norm()).abs() > 1e-12 || a_outer.norm() == 0.0 {
                return Err(Error::NoSolution(format!(
                    "path amplitudes {:.6} and {:.6} cannot cancel",
                    a_outer.norm(),
                    a_overlap.norm()
                )));
            }
            phases[k] = (-a_overlap / a_outer).arg();
        }
        out.calibration = Some(phases);
        out.offsets = [0.0; 2];
        out.apply_phases();
        for photon in [1u8, 2] {
            let residual = out.dark_port_probability(photon)?;
            if residual > DARK_PORT_TOL {
                return Err(Error::NoSolution(format!("C{photon} residual {residual:e} after calibration")));
            }
        }
        Ok(out)
    }

    fn apply_phases(&mut self) {
        let base = self.calibration.unwrap_or([0.0; 2]);
        self.set_phase("CAL1", base[0] + self.offsets[0]);
        self.set_phase("CAL2", base[1] + self.offsets[1]);
    }

    /// Phase added to CALn on top of calibration, as when a path length is
    /// scanned.
    pub fn with_phase_offset(&self, photon: u8, radians: f64) -> HardyCircuit {
        let mut out = self.clone();
        out.offsets[usize::from(photon == 2)] = radians;
        out.apply_phases();
        out
    }

    pub fn phase_offsets(&self) -> [f64; 2] {
        self.offsets
    }

    /// Blocks `path` just before BS3.
    pub fn with_block(&self, path: &str) -> Result<HardyCircuit> {
        self.layout().path_index(path)?;
        let mut out = self.clone();
        let at = out.find("BS3").ok_or_else(|| Error::NoSolution("missing BS3".into()))?;
        out.elements.insert(at, CircuitElement::block(path));
        Ok(out)
    }

    /// Rotates every half-wave plate by `delta`.
    pub fn with_waveplate_misalignment(&self, delta: f64) -> HardyCircuit {
        let mut out = self.clone();
        for e in &mut out.elements {
            if let CircuitElement::Halfwave { angle, .. } = e {
                *angle += delta;
            }
        }
        out
    }

    /// Same circuit without the C-NOT and readout plates.
    pub fn without_meter(&self) -> HardyCircuit {
        let mut out = self.clone();
        out.elements.retain(|e| !matches!(e, CircuitElement::Halfwave { .. }));
        out
    }

    /// Replaces the splitter convention while keeping the calibration phases.
    /// Used to exercise failure detection.
    #[doc(hidden)]
    pub fn with_convention_unchecked(&self, convention: SplitterConvention) -> HardyCircuit {
        HardyCircuit { convention, ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<HardyCircuit> {
        let c: HardyCircuit = serde_json::from_str(text)?;
        let layout = c.layout();
        for e in &c.elements {
            e.transfer(&layout, &c.convention)?;
        }
        Ok(c)
    }

    pub(crate) fn require_calibration(&self) -> Result<()> {
        if self.calibration.is_none() {
            return Err(Error::CalibrationRequired);
        }
        Ok(())
    }

    /// Elements up to and including the first element named `name`.
    pub(crate) fn prefix_through(&self, name: &str) -> &[CircuitElement] {
        &self.elements[..self.find(name).map_or(self.elements.len(), |i| i + 1)]
    }

    /// Elements from `name` onward.
    pub(crate) fn suffix_from(&self, name: &str) -> &[CircuitElement] {
        &self.elements[self.find(name).unwrap_or(self.elements.len())..]
    }

    /// Photon 1 on NO1 and photon 2 on NO2 ahead of the input splitters, with
    /// polarization `Σ ξ_kl |s_k>|s_l>` where `s_0 = +`, `s_1 = −`. Photon 2
    /// carries a different internal tag when `distinguishable`.
    pub fn input_state(&self, meter: &Ket, distinguishable: bool) -> Result<TwoPhotonState> {
        if !meter.space().compatible(&Space::meter()) {
            return Err(Error::SpaceMismatch(format!("expected two meter qubits, got {}", meter.space())));
        }
        let layout = self.layout();
        let tag2 = if distinguishable { Tag::Second } else { Tag::First };
        let mut terms = Vec::with_capacity(16);
        for (idx, xi) in meter.amplitudes().iter().enumerate() {
            let (k, l) = (Sign::from_bit(idx >> 1), Sign::from_bit(idx & 1));
            for p in [Pol::H, Pol::V] {
                for q in [Pol::H, Pol::V] {
                    let c = xi * k.component(p) * l.component(q);
                    if c.norm_sqr() == 0.0 {
                        continue;
                    }
                    let a = layout.mode(Tag::First, "NO1", p)?;
                    let b = layout.mode(tag2, "NO2", q)?;
                    terms.push((a, b, c));
                }
            }
        }
        TwoPhotonState::from_creation_terms(layout, &terms)
    }

    /// Both photons H-polarized, indistinguishable.
    pub fn polarized_input(&self, pol: Pol) -> Result<TwoPhotonState> {
        let layout = self.layout();
        let a = layout.mode(Tag::First, "NO1", pol)?;
        let b = layout.mode(Tag::First, "NO2", pol)?;
        TwoPhotonState::from_creation_terms(layout, &[(a, b, Complex64::new(1.0, 0.0))])
    }

    pub fn propagate(&self, state: &TwoPhotonState) -> Result<TwoPhotonState> {
        propagate(state, &self.elements, &self.convention)
    }

    /// Probability of any photon at `Cn` for H-polarized input, with the meter
    /// plates removed and the other photon's overlapping arm blocked.
    pub fn dark_port_probability(&self, photon: u8) -> Result<f64> {
        let other = if photon == 1 { 2 } else { 1 };
        let probe = self.without_meter().with_block(overlap_path(other))?;
        let out = probe.propagate(&probe.polarized_input(Pol::H)?)?;
        Ok(out.occupation_probability(&rail_modes(&out.layout().clone(), bright_port(photon))?))
    }
}

/// All four modes (both tags and polarizations) on `path`.
pub(crate) fn rail_modes(layout: &ModeLayout, path: &str) -> Result<Vec<usize>> {
    Ok(layout.indices_on_path(layout.path_index(path)?).to_vec())
}

/// Modes on `path` with polarization `pol`, both tags.
pub(crate) fn rail_modes_pol(layout: &ModeLayout, path: &str, pol: Pol) -> Result<Vec<usize>> {
    let p = layout.path_index(path)?;
    Ok([Tag::First, Tag::Second].iter().map(|&tag| layout.index(Mode { tag, path: p, pol })).collect())
}
