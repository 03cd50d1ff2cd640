use std::fmt;

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::exec::{self, Execution};
use super::source::{source_ket, SourceConfig};
use crate::error::{Error, Result};
use crate::meter::MeterConfig;
use crate::photonics::{coincidence_probabilities, AnalyzerSetting, HardyCircuit, NoiseModel};
use crate::statekit::Ket;
use crate::weakval::{Arm, ArmLabel, ArmPair};

/// Substitute model for the apparatus imperfections.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImperfectionModel {
    /// Two-photon interference visibility at BS3.
    pub hom_visibility: f64,
    /// Angle added to every half-wave plate, source plates included.
    pub waveplate_misalignment: f64,
    pub single_photon_visibility: f64,
}

impl Default for ImperfectionModel {
    fn default() -> Self {
        ImperfectionModel { hom_visibility: 0.978, waveplate_misalignment: 0.0, single_photon_visibility: 1.0 }
    }
}

impl ImperfectionModel {
    pub const IDEAL: ImperfectionModel =
        ImperfectionModel { hom_visibility: 1.0, waveplate_misalignment: 0.0, single_photon_visibility: 1.0 };

    pub fn noise(&self) -> NoiseModel {
        NoiseModel { hom_overlap: self.hom_visibility, single_photon_visibility: self.single_photon_visibility }
    }

    pub fn validate(&self) -> Result<()> {
        self.noise().validate()?;
        if !self.waveplate_misalignment.is_finite() {
            return Err(Error::InvalidScenario("misalignment must be finite".into()));
        }
        Ok(())
    }
}

/// What the apparatus is configured to measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Hardy,
    /// Arms outside `arms` are blocked.
    FixedArm { arms: ArmPair },
    /// `blocked` (O1 or O2) is blocked and the other interferometer's phase is
    /// offset by `phase`.
    VisibilityScan { blocked: ArmLabel, phase: f64 },
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Hardy => write!(f, "hardy"),
            Scenario::FixedArm { arms } => {
                let a = ArmLabel { photon: 1, arm: arms.first };
                let b = ArmLabel { photon: 2, arm: arms.second };
                write!(f, "fixed_arm({a},{b})")
            }
            Scenario::VisibilityScan { blocked, phase } => write!(f, "visibility_scan({blocked},{phase})"),
        }
    }
}

impl Scenario {
    fn circuit(&self, base: &HardyCircuit) -> Result<HardyCircuit> {
        match *self {
            Scenario::Hardy => Ok(base.clone()),
            Scenario::FixedArm { arms } => {
                if arms.first == Arm::Overlap && arms.second == Arm::Overlap {
                    return Err(Error::InvalidScenario(
                        "fixed_arm(O1,O2): both photons leave BS3 through the same port, so no coincidences".into(),
                    ));
                }
                let other = |arm: Arm, photon: u8| match arm {
                    Arm::Outer => crate::photonics::overlap_path(photon),
                    Arm::Overlap => crate::photonics::outer_path(photon),
                };
                base.with_block(other(arms.first, 1))?.with_block(other(arms.second, 2))
            }
            Scenario::VisibilityScan { blocked, phase } => {
                if blocked.arm != Arm::Overlap {
                    return Err(Error::UnknownLabel(format!("blocked arm must be O1 or O2, got {blocked}")));
                }
                let scanned = if blocked.photon == 1 { 2 } else { 1 };
                Ok(base.with_block(&blocked.to_string())?.with_phase_offset(scanned, phase))
            }
        }
    }
}

/// What a single sampled shot represents.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialUnit {
    /// One post-selected pair: a shot clicks with `P(basis | coincidence)`.
    /// Visibility scans normalize by the fringe peak instead, so the relative
    /// depth of the fringe survives.
    #[default]
    Coincidence,
    /// One emitted pair: a shot clicks with the absolute coincidence
    /// probability of the basis.
    Emitted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotPlan {
    pub shots_per_basis: u64,
    pub seed: u64,
    /// Independent random streams per basis; counts depend on this but not
    /// on `execution`.
    pub shards: u32,
    #[serde(default)]
    pub trials: TrialUnit,
    #[serde(default)]
    pub execution: Execution,
}

impl ShotPlan {
    pub const DEFAULT_SHARDS: u32 = 8;

    pub fn new(shots_per_basis: u64, seed: u64) -> Self {
        ShotPlan {
            shots_per_basis,
            seed,
            shards: Self::DEFAULT_SHARDS,
            trials: TrialUnit::default(),
            execution: Execution::default(),
        }
    }

    pub fn with_execution(self, execution: Execution) -> Self {
        ShotPlan { execution, ..self }
    }

    pub fn with_shards(self, shards: u32) -> Self {
        ShotPlan { shards, ..self }
    }

    pub fn with_trials(self, trials: TrialUnit) -> Self {
        ShotPlan { trials, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots_per_basis == 0 {
            return Err(Error::InvalidPlan("shots_per_basis must be at least 1".into()));
        }
        if self.shards == 0 || self.shards > u32::from(u16::MAX) {
            return Err(Error::InvalidPlan(format!("shards must be in 1..=65535, got {}", self.shards)));
        }
        Ok(())
    }
}

/// Exact per-basis probabilities for one configuration, indexed by
/// `AnalyzerSetting::index`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisProbabilities {
    /// Absolute C1∧C2 probability with the analyzers set to the basis.
    pub absolute: [f64; 4],
    /// Absolute probabilities divided by the coincidence normalization.
    pub conditional: [f64; 4],
}

impl BasisProbabilities {
    pub fn per_shot(&self, unit: TrialUnit) -> [f64; 4] {
        match unit {
            TrialUnit::Coincidence => self.conditional,
            TrialUnit::Emitted => self.absolute,
        }
    }
}

pub(crate) fn check_strength(strength: f64) -> Result<()> {
    if !(strength.is_finite() && strength <= 1.0) {
        return Err(Error::InvalidMeter(format!("strength {strength} outside (0, 1]")));
    }
    if strength <= crate::meter::ZERO_STRENGTH_TOL {
        return Err(Error::ZeroStrength(strength));
    }
    Ok(())
}

/// Meter ket produced by the source plates for `strength`, with the plates
/// rotated by the misalignment.
pub fn prepared_meter(strength: f64, imperfections: &ImperfectionModel) -> Result<Ket> {
    let mut src = SourceConfig::for_strength(strength)?;
    src.hwp1_angle += imperfections.waveplate_misalignment;
    src.hwp2_angle += imperfections.waveplate_misalignment;
    source_ket(&src)
}

pub fn scenario_probabilities(
    scenario: &Scenario,
    strength: f64,
    imperfections: &ImperfectionModel,
) -> Result<BasisProbabilities> {
    MeterConfig::from_strength(strength)?;
    imperfections.validate()?;
    let base = HardyCircuit::calibrated().with_waveplate_misalignment(imperfections.waveplate_misalignment);
    let meter = prepared_meter(strength, imperfections)?;
    let noise = imperfections.noise();
    let absolute = coincidence_probabilities(&scenario.circuit(&base)?, &meter, &noise)?;
    let norm = match scenario {
        Scenario::VisibilityScan { blocked, .. } => {
            // The basis-summed fringe is a pure first harmonic in the phase.
            let at = |phi: f64| -> Result<f64> {
                let s = Scenario::VisibilityScan { blocked: *blocked, phase: phi };
                Ok(coincidence_probabilities(&s.circuit(&base)?, &meter, &noise)?.iter().sum())
            };
            let (f0, f1, f2) = (at(0.0)?, at(std::f64::consts::FRAC_PI_2)?, at(std::f64::consts::PI)?);
            let mean = (f0 + f2) / 2.0;
            mean + (((f0 - f2) / 2.0).powi(2) + (f1 - mean).powi(2)).sqrt()
        }
        _ => absolute.iter().sum(),
    };
    if norm <= 0.0 {
        return Err(Error::OrthogonalSelection(norm));
    }
    Ok(BasisProbabilities { absolute, conditional: absolute.map(|p| (p / norm).min(1.0)) })
}

/// Per-basis coincidence counts from one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub scenario: Scenario,
    pub strength: f64,
    pub seed: u64,
    pub shots_per_basis: u64,
    pub coincidences: [u64; 4],
    /// Per-shot click probabilities that were sampled.
    pub probabilities: [f64; 4],
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.coincidences.iter().sum()
    }

    pub fn records(&self) -> Vec<RunRecord> {
        AnalyzerSetting::ALL
            .iter()
            .map(|a| RunRecord {
                scenario: self.scenario.to_string(),
                strength: self.strength,
                basis: a.to_string(),
                shots: self.shots_per_basis,
                coincidences: self.coincidences[a.index()],
                seed: self.seed,
            })
            .collect()
    }
}

/// One line of the run log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub strength: f64,
    pub basis: String,
    pub shots: u64,
    pub coincidences: u64,
    pub seed: u64,
}

pub fn records_to_jsonl(records: &[RunRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Stream id of one shard: `salt` separates independent runs under one seed.
fn stream_id(salt: u32, basis: usize, shard: u32) -> u64 {
    (u64::from(salt) << 32) | ((basis as u64) << 16) | u64::from(shard)
}

fn shard_len(total: u64, shards: u32, shard: u32) -> u64 {
    let (q, r) = (total / u64::from(shards), total % u64::from(shards));
    q + u64::from(u64::from(shard) < r)
}

/// Bernoulli clicks for every basis. Each `(basis, shard)` pair owns its
/// random stream, so scheduling cannot change the result.
pub fn sample_counts(probabilities: &[f64; 4], plan: &ShotPlan, salt: u32) -> Result<[u64; 4]> {
    plan.validate()?;
    let mut dists = Vec::with_capacity(4);
    for &p in probabilities {
        dists.push(Bernoulli::new(p.clamp(0.0, 1.0)).map_err(|e| Error::InvalidPlan(e.to_string()))?);
    }
    let jobs: Vec<(usize, u32)> = (0..4).flat_map(|b| (0..plan.shards).map(move |s| (b, s))).collect();
    let per_job = exec::map(plan.execution, jobs, |(b, shard)| {
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        rng.set_stream(stream_id(salt, b, shard));
        let n = shard_len(plan.shots_per_basis, plan.shards, shard);
        let hits = (0..n).filter(|_| dists[b].sample(&mut rng)).count() as u64;
        (b, hits)
    });
    let mut counts = [0u64; 4];
    for (b, hits) in per_job {
        counts[b] += hits;
    }
    Ok(counts)
}

pub fn run_counts(
    scenario: &Scenario,
    strength: f64,
    plan: &ShotPlan,
    imperfections: &ImperfectionModel,
) -> Result<Counts> {
    run_counts_salted(scenario, strength, plan, imperfections, 0)
}

pub fn run_counts_salted(
    scenario: &Scenario,
    strength: f64,
    plan: &ShotPlan,
    imperfections: &ImperfectionModel,
    salt: u32,
) -> Result<Counts> {
    check_strength(strength)?;
    plan.validate()?;
    let probabilities = scenario_probabilities(scenario, strength, imperfections)?.per_shot(plan.trials);
    let coincidences = sample_counts(&probabilities, plan, salt)?;
    Ok(Counts {
        scenario: *scenario,
        strength,
        seed: plan.seed,
        shots_per_basis: plan.shots_per_basis,
        coincidences,
        probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meter::conditional_readout_closed_form;
    use crate::weakval::{hardy_postselection, hardy_preselection};

    #[test]
    fn ideal_hardy_probabilities_match_closed_form() {
        let p = scenario_probabilities(&Scenario::Hardy, 0.3, &ImperfectionModel::IDEAL).unwrap();
        let cfg = MeterConfig::from_strength(0.3).unwrap();
        let closed = conditional_readout_closed_form(&hardy_preselection(), &hardy_postselection(), &cfg).unwrap();
        for b in 0..4 {
            assert!((p.conditional[b] - closed.probabilities[b]).abs() < 1e-12);
        }
    }

    #[test]
    fn repeatable_and_schedule_independent() {
        let plan = ShotPlan::new(20_000, 11);
        let a = run_counts(&Scenario::Hardy, 0.3, &plan, &ImperfectionModel::IDEAL).unwrap();
        let b = run_counts(&Scenario::Hardy, 0.3, &plan, &ImperfectionModel::IDEAL).unwrap();
        let c = run_counts(&Scenario::Hardy, 0.3, &plan.with_execution(Execution::Sequential), &ImperfectionModel::IDEAL)
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.coincidences, c.coincidences);
        let d = run_counts(&Scenario::Hardy, 0.3, &ShotPlan::new(20_000, 12), &ImperfectionModel::IDEAL).unwrap();
        assert_ne!(a.coincidences, d.coincidences);
    }

    #[test]
    fn shard_lengths_cover_total() {
        for (total, shards) in [(10, 3), (4000, 8), (1, 5), (7, 7)] {
            let s: u64 = (0..shards).map(|i| shard_len(total, shards, i)).sum();
            assert_eq!(s, total);
        }
    }

    #[test]
    fn overlapping_pair_is_rejected() {
        let s = Scenario::FixedArm { arms: ArmPair::new(Arm::Overlap, Arm::Overlap) };
        assert!(matches!(scenario_probabilities(&s, 0.5, &ImperfectionModel::IDEAL), Err(Error::InvalidScenario(_))));
        let s = Scenario::VisibilityScan { blocked: "NO1".parse().unwrap(), phase: 0.0 };
        assert!(matches!(scenario_probabilities(&s, 0.5, &ImperfectionModel::IDEAL), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn invalid_plans_rejected() {
        let r = run_counts(&Scenario::Hardy, 0.3, &ShotPlan::new(0, 1), &ImperfectionModel::IDEAL);
        assert!(matches!(r, Err(Error::InvalidPlan(_))));
        let r = run_counts(&Scenario::Hardy, 0.3, &ShotPlan::new(10, 1).with_shards(0), &ImperfectionModel::IDEAL);
        assert!(matches!(r, Err(Error::InvalidPlan(_))));
        let r = run_counts(&Scenario::Hardy, 0.0, &ShotPlan::new(10, 1), &ImperfectionModel::IDEAL);
        assert!(matches!(r, Err(Error::ZeroStrength(_))));
    }

    #[test]
    fn fixed_arm_strong_limit_pattern() {
        // Strength 1: the meter is |++>, and only the C-NOT on O1 flips it.
        let s = Scenario::FixedArm { arms: "O1,NO2".parse().unwrap() };
        let p = scenario_probabilities(&s, 1.0, &ImperfectionModel::IDEAL).unwrap();
        let target = ArmPair::new(Arm::Overlap, Arm::Outer).index();
        for b in 0..4 {
            let want = if b == target { 1.0 } else { 0.0 };
            assert!((p.conditional[b] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn records_and_jsonl() {
        let c = run_counts(&Scenario::Hardy, 0.3, &ShotPlan::new(100, 3), &ImperfectionModel::IDEAL).unwrap();
        let recs = c.records();
        assert_eq!(recs.len(), 4);
        let text = records_to_jsonl(&recs).unwrap();
        assert_eq!(text.lines().count(), 4);
        let back: RunRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(back, recs[0]);
        assert_eq!(back.basis, "++");
        assert_eq!(back.scenario, "hardy");
    }
}
