use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::estimate::{readouts_from_probabilities, estimate_readouts, EstimateWithError};
use super::exec;
use super::sampling::{
    check_strength, prepared_meter, sample_counts, scenario_probabilities, ImperfectionModel, RunRecord, Scenario,
    ShotPlan,
};
use crate::error::{Error, Result};
use crate::photonics::{fringe_scan, uniform_phase_grid, AnalyzerSetting, FringeBasis, HardyCircuit};
use crate::weakval::{ArmLabel, ArmPair};

/// Phase points per fringe in visibility sweeps.
pub const FRINGE_POINTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepKind {
    /// Average fringe visibility with `O2` blocked.
    Fig2Visibility,
    Fig3FixedArm { arms: ArmPair },
    Fig4Hardy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SweepMode {
    Exact,
    MonteCarlo { plan: ShotPlan },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub strength: f64,
    /// One visibility for fig2; four readouts indexed by `2k + l` otherwise.
    pub estimates: Vec<EstimateWithError>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub points: Vec<SweepPoint>,
    /// Sampled runs, empty in exact mode.
    pub records: Vec<RunRecord>,
}

/// Inclusive grid of `count` points from `start` to `stop`.
pub fn linear_grid(start: f64, stop: f64, count: usize) -> Result<Vec<f64>> {
    match count {
        0 => Err(Error::EmptyGrid),
        1 => Ok(vec![start]),
        _ => Ok((0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect()),
    }
}

pub fn sweep(kind: &SweepKind, grid: &[f64], mode: &SweepMode, imperfections: &ImperfectionModel) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for &s in grid {
        check_strength(s)?;
    }
    imperfections.validate()?;
    let execution = match mode {
        SweepMode::Exact => exec::Execution::default(),
        SweepMode::MonteCarlo { plan } => {
            plan.validate()?;
            plan.execution
        }
    };
    let jobs: Vec<(u32, f64)> = grid.iter().enumerate().map(|(i, &s)| (i as u32, s)).collect();
    let results = exec::map(execution, jobs, |(i, s)| sweep_point(kind, s, i, mode, imperfections));
    let mut points = Vec::with_capacity(grid.len());
    let mut records = Vec::new();
    for r in results {
        let (p, mut rec) = r?;
        points.push(p);
        records.append(&mut rec);
    }
    Ok(SweepResult { kind: *kind, points, records })
}

fn sweep_point(
    kind: &SweepKind,
    strength: f64,
    index: u32,
    mode: &SweepMode,
    imperfections: &ImperfectionModel,
) -> Result<(SweepPoint, Vec<RunRecord>)> {
    match kind {
        SweepKind::Fig2Visibility => visibility_point(strength, index, mode, imperfections),
        SweepKind::Fig3FixedArm { arms } => {
            readout_point(&Scenario::FixedArm { arms: *arms }, strength, index, mode, imperfections)
        }
        SweepKind::Fig4Hardy => readout_point(&Scenario::Hardy, strength, index, mode, imperfections),
    }
}

fn readout_point(
    scenario: &Scenario,
    strength: f64,
    index: u32,
    mode: &SweepMode,
    imperfections: &ImperfectionModel,
) -> Result<(SweepPoint, Vec<RunRecord>)> {
    let probs = scenario_probabilities(scenario, strength, imperfections)?;
    match mode {
        SweepMode::Exact => {
            let est = readouts_from_probabilities(&probs.conditional, strength)?;
            Ok((SweepPoint { strength, estimates: est.to_vec() }, Vec::new()))
        }
        SweepMode::MonteCarlo { plan } => {
            let counts = sample_counts(&probs.per_shot(plan.trials), plan, index)?;
            let est = estimate_readouts(&counts, strength)?;
            let recs = records(scenario, strength, plan, &counts);
            Ok((SweepPoint { strength, estimates: est.to_vec() }, recs))
        }
    }
}

fn records(scenario: &Scenario, strength: f64, plan: &ShotPlan, counts: &[u64; 4]) -> Vec<RunRecord> {
    AnalyzerSetting::ALL
        .iter()
        .map(|a| RunRecord {
            scenario: scenario.to_string(),
            strength,
            basis: a.to_string(),
            shots: plan.shots_per_basis,
            coincidences: counts[a.index()],
            seed: plan.seed,
        })
        .collect()
}

fn blocked_o2() -> ArmLabel {
    "O2".parse().expect("valid label")
}

fn visibility_point(
    strength: f64,
    index: u32,
    mode: &SweepMode,
    imperfections: &ImperfectionModel,
) -> Result<(SweepPoint, Vec<RunRecord>)> {
    let phases = uniform_phase_grid(FRINGE_POINTS);
    match mode {
        SweepMode::Exact => {
            let circuit =
                HardyCircuit::calibrated().with_waveplate_misalignment(imperfections.waveplate_misalignment);
            let meter = prepared_meter(strength, imperfections)?;
            let v = fringe_scan(&circuit, &meter, "O2", &phases, FringeBasis::Average, &imperfections.noise())?;
            Ok((SweepPoint { strength, estimates: vec![EstimateWithError::exact(v)] }, Vec::new()))
        }
        SweepMode::MonteCarlo { plan } => {
            let mut counts = Vec::with_capacity(phases.len());
            let mut recs = Vec::new();
            for (j, &phi) in phases.iter().enumerate() {
                let scenario = Scenario::VisibilityScan { blocked: blocked_o2(), phase: phi };
                let p = scenario_probabilities(&scenario, strength, imperfections)?.per_shot(plan.trials);
                let c = sample_counts(&p, plan, (index << 8) | j as u32)?;
                recs.extend(records(&scenario, strength, plan, &c));
                counts.push(c);
            }
            let v = fit_visibility(&phases, &counts)?;
            Ok((SweepPoint { strength, estimates: vec![v] }, recs))
        }
    }
}

/// Count-weighted visibility `Σ_b |C_b| / Σ_b A_b` of first-harmonic fits
/// `n_b(φ) = A_b + Re(C_b e^{iφ})` on a uniform grid, with linearized
/// Poisson error.
pub fn fit_visibility(phases: &[f64], counts: &[[u64; 4]]) -> Result<EstimateWithError> {
    let m = phases.len();
    if m < 3 || counts.len() != m {
        return Err(Error::GridTooShort(m));
    }
    let mf = m as f64;
    let mut a = [0.0; 4];
    let mut c = [Complex64::new(0.0, 0.0); 4];
    for (j, &phi) in phases.iter().enumerate() {
        let e = Complex64::from_polar(1.0, -phi);
        for b in 0..4 {
            let n = counts[j][b] as f64;
            a[b] += n / mf;
            c[b] += e * (2.0 * n / mf);
        }
    }
    let sum_a: f64 = a.iter().sum();
    if sum_a <= 0.0 {
        return Err(Error::AllZeroCounts);
    }
    let sum_c: f64 = c.iter().map(|z| z.norm()).sum();
    let v = sum_c / sum_a;
    let mut var = 0.0;
    for (j, &phi) in phases.iter().enumerate() {
        let e = Complex64::from_polar(1.0, -phi);
        for b in 0..4 {
            let dc = if c[b].norm() > 0.0 { (c[b].conj() / c[b].norm() * e).re * 2.0 / mf } else { 0.0 };
            let g = (dc * sum_a - sum_c / mf) / (sum_a * sum_a);
            var += g * g * counts[j][b] as f64;
        }
    }
    let mut totals = [0u64; 4];
    for row in counts {
        for b in 0..4 {
            totals[b] += row[b];
        }
    }
    Ok(EstimateWithError { value: v, stderr: var.sqrt(), counts: Some(totals) })
}
