//! Two-photon linear-optics simulation of the double interferometer.
//!
//! Modes are path × polarization × internal tag. Photons with equal tags
//! interfere at BS3; a partially distinguishable pair is the probability
//! mixture of the equal-tag and different-tag cases.

mod analysis;
mod circuit;
mod element;
mod mode;
mod state;

pub use analysis::{
    bright_port_probability, circuit_readouts, coincidence_probabilities, coincidence_probability, fringe_curves,
    fringe_scan, hom_coincidence, postselection_projector, preselected_state, uniform_phase_grid,
    visibility_of_curves, FringeBasis, NoiseModel, MIN_FRINGE_POINTS,
};
pub use circuit::{
    bright_port, outer_path, overlap_path, HardyCircuit, DARK_PORT_TOL, PATHS, READOUT_ANGLE,
};
pub use element::{propagate, transfer_matrix, CircuitElement, SplitterConvention};
pub use mode::{AnalyzerSetting, Mode, ModeLayout, Pol, Sign, Tag};
pub use state::TwoPhotonState;
