//! Named invariant checks run by `weakhardy selftest`.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::experiment::{
    estimate_marginal, estimate_readouts, run_counts, Execution, ImperfectionModel, Scenario, ShotPlan,
};
use crate::meter::{
    conditional_readout_closed_form, conditional_readout_oracle, outcome_probabilities_with, povm_element,
    visibility_closed_form, MeterConfig, MeterKind,
};
use crate::photonics::{
    fringe_scan, hom_coincidence, postselection_projector, preselected_state, uniform_phase_grid, FringeBasis,
    HardyCircuit, NoiseModel, SplitterConvention, DARK_PORT_TOL,
};
use crate::statekit::{fidelity, random, Density, Ket, Operator, Space};
use crate::weakval::{hardy_postselection, hardy_preselection, joint_weak_values, marginal_weak_value, ArmPair};

#[derive(Clone, Copy, Debug, Default)]
pub struct SelftestOptions {
    /// Runs the circuit checks on a circuit whose splitter convention was
    /// changed after calibration. The dark-port check must then fail.
    pub corrupt_splitter: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

type Check = fn(&Context) -> Result<String, String>;

struct Context {
    circuit: HardyCircuit,
}

const CHECKS: [(&str, Check); 12] = [
    ("weak_values", weak_values),
    ("closed_form_vs_state_vector", closed_form_vs_state_vector),
    ("weak_limit", weak_limit),
    ("readout_identity", readout_identity),
    ("strong_limit", strong_limit),
    ("visibility_tradeoff", visibility_tradeoff),
    ("povm_and_disturbance", povm_and_disturbance),
    ("dark_port", dark_port),
    ("circuit_states", circuit_states),
    ("circuit_readouts", circuit_readouts_check),
    ("hom_interference", hom_interference),
    ("monte_carlo", monte_carlo),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

pub fn run_selftest(opts: &SelftestOptions) -> Vec<CheckResult> {
    let mut circuit = HardyCircuit::calibrated();
    if opts.corrupt_splitter {
        circuit = circuit.with_convention_unchecked(SplitterConvention { transmissivity: 0.6, ..Default::default() });
    }
    let ctx = Context { circuit };
    CHECKS
        .iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let outcome = f(&ctx);
            let elapsed = start.elapsed();
            match outcome {
                Ok(detail) => CheckResult { name, passed: true, detail, elapsed },
                Err(detail) => CheckResult { name, passed: false, detail, elapsed },
            }
        })
        .collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: crate::Error) -> String {
    e.to_string()
}

fn weak_values(_: &Context) -> Result<String, String> {
    let w = joint_weak_values(&hardy_preselection(), &hardy_postselection()).map_err(e2s)?;
    let expected = [-1.0, 1.0, 1.0, 0.0];
    let dev = w.values().iter().zip(expected).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    ensure(dev <= 1e-12, || format!("joint weak values off by {dev:e}"))?;
    for label in ["O1", "O2"] {
        let m = marginal_weak_value(label.parse().map_err(e2s)?, &w).map_err(e2s)?;
        ensure((m - 1.0).norm() <= 1e-12, || format!("w({label}) = {m}"))?;
    }
    Ok(format!("max deviation {dev:.1e}, zeta {}", w.zeta()))
}

fn random_triple(rng: &mut ChaCha8Rng) -> (Ket, Ket, MeterConfig) {
    use rand::Rng;
    let pre = random::ket(rng, Space::signal());
    let post = random::ket(rng, Space::signal());
    let s: f64 = rng.random_range(0.01..=1.0);
    (pre, post, MeterConfig::from_strength(s).expect("strength in range"))
}

fn closed_form_vs_state_vector(_: &Context) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (pre, post, cfg) = random_triple(&mut rng);
        let a = conditional_readout_closed_form(&pre, &post, &cfg).map_err(e2s)?;
        let b = conditional_readout_oracle(&pre, &post, &cfg).map_err(e2s)?;
        worst = worst.max(a.max_readout_deviation(&b));
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("100 triples, max deviation {worst:.1e}"))
}

fn hardy_readouts(s: f64) -> Result<[f64; 4], String> {
    let cfg = MeterConfig::from_strength(s).map_err(e2s)?;
    let t = conditional_readout_closed_form(&hardy_preselection(), &hardy_postselection(), &cfg).map_err(e2s)?;
    t.readouts.ok_or_else(|| "missing readouts".into())
}

fn weak_limit(_: &Context) -> Result<String, String> {
    let target = [-1.0, 1.0, 1.0, 0.0];
    let mut last = f64::INFINITY;
    let mut ratio = 0.0f64;
    for s in [0.2, 0.1, 0.05, 0.01] {
        let r = hardy_readouts(s)?;
        let dev = r.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(dev < last, || format!("deviation {dev} at s = {s} did not decrease"))?;
        last = dev;
        ratio = ratio.max(dev / s);
    }
    ensure(ratio < 10.0, || format!("deviation/strength {ratio}"))?;
    Ok(format!("deviation at 0.01: {last:.2e}, max deviation/strength {ratio:.3}"))
}

fn readout_identity(_: &Context) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1d);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (pre, post, cfg) = random_triple(&mut rng);
        let r = conditional_readout_closed_form(&pre, &post, &cfg).map_err(e2s)?.readouts.unwrap_or_default();
        worst = worst.max((r.iter().sum::<f64>() - 1.0).abs());
    }
    ensure(worst <= 1e-12, || format!("|ΣR − 1| = {worst:e}"))?;
    Ok(format!("50 cases, max |ΣR − 1| {worst:.1e}"))
}

fn strong_limit(_: &Context) -> Result<String, String> {
    let r = hardy_readouts(1.0)?;
    // Collapse onto each path product, then post-select: weights |<φ|kl>|²|<kl|ψ>|².
    let (pre, post) = (hardy_preselection(), hardy_postselection());
    let w: Vec<f64> = (0..4).map(|i| (post.amplitude(i).conj() * pre.amplitude(i)).norm_sqr()).collect();
    let total: f64 = w.iter().sum();
    let dev = (0..4).map(|i| (r[i] - w[i] / total).abs()).fold(0.0, f64::max);
    ensure(dev <= 1e-12, || format!("deviation from collapse oracle {dev:e}"))?;
    Ok(format!("deviation {dev:.1e}"))
}

fn visibility_tradeoff(ctx: &Context) -> Result<String, String> {
    let grid = uniform_phase_grid(16);
    let mut worst = 0.0f64;
    for k in 0..10 {
        let cfg = MeterConfig::from_strength(0.05 + 0.1 * k as f64).map_err(e2s)?;
        let (d, e) = (cfg.delta(), cfg.epsilon());
        let v = fringe_scan(
            &ctx.circuit,
            &crate::meter::meter_state(&cfg),
            "O2",
            &grid,
            FringeBasis::Average,
            &NoiseModel::IDEAL,
        )
        .map_err(e2s)?;
        worst = worst.max((v - 2.0 * e * (d + e)).abs());
        let rep = visibility_closed_form(&cfg);
        ensure(rep.complementarity_gap() > 0.0, || format!("V² + K² = 1 at interior strength {}", cfg.strength()))?;
    }
    ensure(worst <= 1e-9, || format!("fringe visibility off by {worst:e}"))?;
    let gap = visibility_closed_form(&MeterConfig::from_strength(0.5).map_err(e2s)?).complementarity_gap();
    ensure(gap >= 1e-3, || format!("gap at 0.5 is {gap}"))?;
    Ok(format!("max deviation {worst:.1e}, gap at 0.5 {gap:.4}"))
}

fn povm_and_disturbance(_: &Context) -> Result<String, String> {
    for k in 0..20 {
        let cfg = MeterConfig::from_strength(k as f64 / 19.0).map_err(e2s)?;
        let mut sum = Operator::identity(Space::signal()).scale(num_complex::Complex64::new(0.0, 0.0));
        for p in ArmPair::all() {
            let el = povm_element(p, &cfg);
            let min_eig = el.operator.matrix().clone().symmetric_eigenvalues().min();
            ensure(min_eig >= -1e-12, || format!("Π_{p} has eigenvalue {min_eig:e}"))?;
            sum = sum.add(&el.operator).map_err(e2s)?;
        }
        let id = Operator::identity(Space::signal());
        let dev = (sum.matrix() - id.matrix()).iter().map(|x| x.norm()).fold(0.0, f64::max);
        ensure(dev <= 1e-12, || format!("ΣΠ ≠ I by {dev:e} at s = {}", cfg.strength()))?;
    }
    let cfg0 = MeterConfig::from_strength(0.0).map_err(e2s)?;
    let psi = hardy_preselection();
    let ent = crate::meter::disturbance_comparison(&psi, &cfg0, MeterKind::Entangled).map_err(e2s)?;
    let sep = crate::meter::disturbance_comparison(&psi, &cfg0, MeterKind::Separable).map_err(e2s)?;
    ensure(ent >= 1.0 - 1e-12 && sep < 0.999, || format!("fidelities entangled {ent}, separable {sep}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tv = 0.0f64;
    for _ in 0..20 {
        let k = random::ket(&mut rng, Space::signal());
        let cfg = MeterConfig::from_strength(0.37).map_err(e2s)?;
        let a = outcome_probabilities_with(&k, &cfg, MeterKind::Entangled).map_err(e2s)?;
        let b = outcome_probabilities_with(&k, &cfg, MeterKind::Separable).map_err(e2s)?;
        let d: f64 = a.probabilities.iter().zip(&b.probabilities).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0;
        tv = tv.max(d);
    }
    ensure(tv <= 1e-12, || format!("total variation {tv:e}"))?;
    Ok(format!("fidelity entangled {ent:.12}, separable {sep:.4}; TV {tv:.1e}"))
}

fn dark_port(ctx: &Context) -> Result<String, String> {
    let p1 = ctx.circuit.dark_port_probability(1).map_err(e2s)?;
    let p2 = ctx.circuit.dark_port_probability(2).map_err(e2s)?;
    ensure(p1 <= DARK_PORT_TOL && p2 <= DARK_PORT_TOL, || format!("P(C1) = {p1:e}, P(C2) = {p2:e}"))?;
    Ok(format!("P(C1) = {p1:.1e}, P(C2) = {p2:.1e}"))
}

fn circuit_states(ctx: &Context) -> Result<String, String> {
    let f = |a: &Ket, b: &Ket| -> Result<f64, String> {
        fidelity(&Density::pure(a).map_err(e2s)?, &Density::pure(b).map_err(e2s)?).map_err(e2s)
    };
    let (psi, _) = preselected_state(&ctx.circuit).map_err(e2s)?;
    let phi = postselection_projector(&ctx.circuit).map_err(e2s)?;
    let (fp, ff) = (f(&psi, &hardy_preselection())?, f(&phi, &hardy_postselection())?);
    ensure(fp >= 1.0 - 1e-9 && ff >= 1.0 - 1e-9, || format!("fidelities psi {fp}, phi {ff}"))?;
    Ok(format!("fidelity psi {fp:.12}, phi {ff:.12}"))
}

fn circuit_readouts_check(ctx: &Context) -> Result<String, String> {
    let mut worst = 0.0f64;
    for k in 1..=10 {
        let cfg = MeterConfig::from_strength(k as f64 / 10.0).map_err(e2s)?;
        let a = crate::photonics::circuit_readouts(&ctx.circuit, &cfg, &NoiseModel::IDEAL).map_err(e2s)?;
        let b = conditional_readout_closed_form(&hardy_preselection(), &hardy_postselection(), &cfg).map_err(e2s)?;
        worst = worst.max(a.max_readout_deviation(&b));
    }
    ensure(worst <= 1e-9, || format!("circuit vs closed form {worst:e}"))?;
    Ok(format!("10 strengths, max deviation {worst:.1e}"))
}

fn hom_interference(_: &Context) -> Result<String, String> {
    let ideal = hom_coincidence(1.0);
    let v = 1.0 - hom_coincidence(0.978) / hom_coincidence(0.0);
    ensure(ideal == 0.0 && (v - 0.978).abs() < 1e-12, || format!("coincidence {ideal}, visibility {v}"))?;
    Ok(format!("ideal coincidence {ideal}, dip visibility {v:.3}"))
}

fn monte_carlo(_: &Context) -> Result<String, String> {
    let plan = ShotPlan::new(4000, 2024);
    let ideal = run_counts(&Scenario::Hardy, 0.3, &plan, &ImperfectionModel::IDEAL).map_err(e2s)?;
    let seq = run_counts(&Scenario::Hardy, 0.3, &plan.with_execution(Execution::Sequential), &ImperfectionModel::IDEAL)
        .map_err(e2s)?;
    ensure(ideal.coincidences == seq.coincidences, || "parallel and sequential counts differ".into())?;
    let nn = estimate_readouts(&ideal.coincidences, 0.3).map_err(e2s)?[0];
    let target = hardy_readouts(0.3)?[0];
    ensure(nn.value < 0.0 && nn.z_score(target) <= 3.0, || format!("R(NO1,NO2) = {} ± {}", nn.value, nn.stderr))?;
    let noisy = run_counts(&Scenario::Hardy, 0.3, &plan, &ImperfectionModel::default()).map_err(e2s)?;
    let o1 = estimate_marginal(&noisy.coincidences, 0.3, "O1".parse().map_err(e2s)?).map_err(e2s)?;
    ensure((o1.value - 0.72).abs() <= 0.15, || format!("R(O1) = {}", o1.value))?;
    Ok(format!("R(NO1,NO2) = {:.4} ± {:.4}; R(O1) = {:.4} ± {:.4}", nn.value, nn.stderr, o1.value, o1.stderr))
}
