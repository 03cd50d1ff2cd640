mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use weakhardy::experiment::{
    estimate_readouts, marginal_weights, readouts_from_probabilities, records_to_jsonl, run_counts,
    scenario_probabilities, sweep, weighted_readout, EstimateWithError, Execution, ImperfectionModel, RunRecord,
    Scenario, ShotPlan, SweepKind, SweepMode, TrialUnit,
};
use weakhardy::photonics::HardyCircuit;
use weakhardy::selftest::{run_selftest, SelftestOptions};
use weakhardy::statekit::{Ket, Space};
use weakhardy::weakval::{
    hardy_postselection, hardy_preselection, joint_weak_values, marginal_weak_value, ArmLabel, ArmPair,
};

use config::{FileConfig, Kind, Mode, Trials};
use output::{Cell, Format, Metadata, Table};

const VERSION: &str = env!("CARGO_PKG_VERSION");
const MARGINALS: [&str; 4] = ["O1", "O2", "NO1", "NO2"];

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(String),
    SelftestFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 3,
            CliError::SelftestFailed(_) => 4,
        }
    }
}

impl From<weakhardy::Error> for CliError {
    fn from(e: weakhardy::Error) -> Self {
        if e.is_domain() {
            CliError::Domain(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(m) => write!(f, "domain error: {m}"),
            CliError::SelftestFailed(n) => write!(f, "selftest: {n} check(s) failed"),
        }
    }
}

/// Weak-measurement readouts in Hardy's two-photon interferometer.
#[derive(Parser, Debug)]
#[command(name = "weakhardy", version)]
struct Cli {
    /// TOML document whose keys mirror the long flag names.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Joint and marginal weak values for a pre/post-selected pair.
    WeakValues {
        /// `hardy`, or `custom` to read `[custom] pre/post` from the config.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Normalized readouts R(k,l) and single-arm marginals at one strength.
    Readout {
        #[arg(long)]
        strength: Option<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Series for one figure over a strength grid.
    Sweep {
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        /// `start:stop:count`, endpoints included.
        #[arg(long)]
        grid: Option<String>,
        /// Arms left open for `fig3`, e.g. `NO1,NO2`.
        #[arg(long)]
        arm: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Runs every invariant check and reports each one.
    Selftest {
        #[arg(long, hide = true)]
        corrupt_splitter: bool,
    },
    /// Prints the calibrated circuit as JSON, or validates and re-emits `--input`.
    Circuit {
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Shots per analyzer basis.
    #[arg(long)]
    shots: Option<u64>,
    /// Defaults to $WEAKHARDY_SEED, then 1.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shards: Option<u32>,
    #[arg(long, value_enum)]
    trials: Option<Trials>,
    /// Disable rayon; counts do not change.
    #[arg(long)]
    sequential: bool,
    /// JSONL run log for Monte Carlo runs.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Two-photon interference visibility at BS3.
    #[arg(long)]
    hom_visibility: Option<f64>,
    /// Angle in radians added to every half-wave plate.
    #[arg(long)]
    misalignment: Option<f64>,
    #[arg(long)]
    single_photon_visibility: Option<f64>,
}

#[derive(Serialize)]
struct Imperfections {
    hom_visibility: f64,
    misalignment: f64,
    single_photon_visibility: f64,
}

#[derive(Serialize)]
struct Sampling {
    shots: u64,
    shards: u32,
    trials: Trials,
    sequential: bool,
}

#[derive(Serialize)]
struct RunSettings {
    mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampling: Option<Sampling>,
    imperfections: Imperfections,
    #[serde(skip)]
    plan: Option<ShotPlan>,
    #[serde(skip)]
    model: ImperfectionModel,
    #[serde(skip)]
    records: Option<PathBuf>,
    #[serde(skip)]
    seed: u64,
}

impl RunSettings {
    fn resolve(args: &RunArgs, file: &FileConfig) -> Result<Self, CliError> {
        let mode = args.mode.or(file.mode).unwrap_or_default();
        let seed = config::resolve_seed(args.seed, file.seed)?;
        let imperfections = Imperfections {
            hom_visibility: args.hom_visibility.or(file.hom_visibility).unwrap_or(1.0),
            misalignment: args.misalignment.or(file.misalignment).unwrap_or(0.0),
            single_photon_visibility: args.single_photon_visibility.or(file.single_photon_visibility).unwrap_or(1.0),
        };
        let model = ImperfectionModel {
            hom_visibility: imperfections.hom_visibility,
            waveplate_misalignment: imperfections.misalignment,
            single_photon_visibility: imperfections.single_photon_visibility,
        };
        model.validate()?;
        let (sampling, plan) = match mode {
            Mode::Exact => (None, None),
            Mode::Mc => {
                let s = Sampling {
                    shots: args.shots.or(file.shots).unwrap_or(config::DEFAULT_SHOTS),
                    shards: args.shards.or(file.shards).unwrap_or(ShotPlan::DEFAULT_SHARDS),
                    trials: args.trials.or(file.trials).unwrap_or_default(),
                    sequential: args.sequential || file.sequential.unwrap_or(false),
                };
                let plan = ShotPlan::new(s.shots, seed)
                    .with_shards(s.shards)
                    .with_trials(match s.trials {
                        Trials::Coincidence => TrialUnit::Coincidence,
                        Trials::Emitted => TrialUnit::Emitted,
                    })
                    .with_execution(if s.sequential { Execution::Sequential } else { Execution::Parallel });
                plan.validate()?;
                (Some(s), Some(plan))
            }
        };
        let records = args.records.clone().or_else(|| file.records.clone());
        if records.is_some() && mode == Mode::Exact {
            return Err(CliError::Usage("--records needs --mode mc".into()));
        }
        Ok(RunSettings { mode, sampling, imperfections, plan, model, records, seed })
    }

    fn write_records(&self, records: &[RunRecord]) -> Result<(), CliError> {
        if let Some(path) = &self.records {
            output::emit(&records_to_jsonl(records)?, Some(path))?;
        }
        Ok(())
    }
}

struct Globals {
    file: FileConfig,
    format: Format,
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("weakhardy: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let g = Globals {
        format: cli.format.or(file.format).unwrap_or_default(),
        output: cli.output.clone().or_else(|| file.output.clone()),
        file,
    };
    match &cli.command {
        Command::WeakValues { scenario } => cmd_weak_values(&g, scenario.as_deref()),
        Command::Readout { strength, run } => cmd_readout(&g, *strength, run),
        Command::Sweep { kind, grid, arm, run } => cmd_sweep(&g, *kind, grid.as_deref(), arm.as_deref(), run),
        Command::Selftest { corrupt_splitter } => cmd_selftest(&g, *corrupt_splitter),
        Command::Circuit { input } => cmd_circuit(&g, input.as_deref()),
    }
}

fn finish<C: Serialize>(g: &Globals, command: &str, seed: u64, config: &C, table: &Table) -> Result<(), CliError> {
    let meta = Metadata { tool: "weakhardy", version: VERSION, command, seed, config };
    output::emit(&output::render(table, &meta, g.format)?, g.output.as_deref())
}

fn custom_ket(amps: &[config::Amplitude], which: &str) -> Result<Ket, CliError> {
    let v: Vec<Complex64> = amps.iter().map(|&a| a.into()).collect();
    if v.len() != 4 {
        return Err(CliError::Usage(format!("custom {which} needs 4 amplitudes, got {}", v.len())));
    }
    Ok(Ket::unnormalized(Space::signal(), v)?.normalize()?)
}

fn cmd_weak_values(g: &Globals, scenario: Option<&str>) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Effective<'a> {
        scenario: &'a str,
    }
    let scenario = scenario.or(g.file.scenario.as_deref()).unwrap_or("hardy");
    let (pre, post) = match scenario {
        "hardy" => (hardy_preselection(), hardy_postselection()),
        "custom" => {
            let c = g.file.custom.as_ref().ok_or_else(|| {
                CliError::Usage("scenario `custom` needs a [custom] table with pre and post in the config".into())
            })?;
            (custom_ket(&c.pre, "pre")?, custom_ket(&c.post, "post")?)
        }
        other => return Err(CliError::Usage(format!("unknown scenario `{other}` (expected hardy or custom)"))),
    };
    let w = joint_weak_values(&pre, &post)?;
    let mut t = Table::new(["observable", "re", "im"]);
    for pair in ArmPair::TABLE_ORDER {
        let v = w.get(pair);
        t.push(vec![pair.to_string().into(), v.re.into(), v.im.into()]);
    }
    for label in MARGINALS {
        let v = marginal_weak_value(label.parse()?, &w)?;
        t.push(vec![label.into(), v.re.into(), v.im.into()]);
    }
    t.push(vec!["zeta".into(), w.zeta().into(), 0.0.into()]);
    let ov = w.overlap();
    t.push(vec!["overlap".into(), ov.re.into(), ov.im.into()]);
    let seed = config::resolve_seed(None, g.file.seed)?;
    finish(g, "weak-values", seed, &Effective { scenario }, &t)
}

fn readout_strength(strength: Option<f64>, file: &FileConfig) -> Result<f64, CliError> {
    strength.or(file.strength).ok_or_else(|| CliError::Usage("--strength is required".into()))
}

fn cmd_readout(g: &Globals, strength: Option<f64>, args: &RunArgs) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Effective<'a> {
        strength: f64,
        #[serde(flatten)]
        run: &'a RunSettings,
    }
    let strength = readout_strength(strength, &g.file)?;
    let settings = RunSettings::resolve(args, &g.file)?;
    let (joint, marginals): ([EstimateWithError; 4], Vec<EstimateWithError>) = match &settings.plan {
        None => {
            let p = scenario_probabilities(&Scenario::Hardy, strength, &settings.model)?;
            let r = readouts_from_probabilities(&p.conditional, strength)?;
            let m = MARGINALS
                .iter()
                .map(|l| {
                    let w = marginal_weights(l.parse().expect("valid label"));
                    EstimateWithError::exact((0..4).map(|b| w[b] * r[b].value).sum())
                })
                .collect();
            (r, m)
        }
        Some(plan) => {
            let c = run_counts(&Scenario::Hardy, strength, plan, &settings.model)?;
            settings.write_records(&c.records())?;
            let r = estimate_readouts(&c.coincidences, strength)?;
            let m = MARGINALS
                .iter()
                .map(|l| {
                    let arm: ArmLabel = l.parse().expect("valid label");
                    weighted_readout(&c.coincidences, strength, &marginal_weights(arm))
                })
                .collect::<weakhardy::Result<_>>()?;
            (r, m)
        }
    };
    let mut t = Table::new(["observable", "R", "err"]);
    for pair in ArmPair::TABLE_ORDER {
        let e = joint[pair.index()];
        t.push(vec![pair.to_string().into(), e.value.into(), e.stderr.into()]);
    }
    for (label, e) in MARGINALS.iter().zip(&marginals) {
        t.push(vec![(*label).into(), e.value.into(), e.stderr.into()]);
    }
    finish(g, "readout", settings.seed, &Effective { strength, run: &settings }, &t)
}

fn cmd_sweep(
    g: &Globals,
    kind: Option<Kind>,
    grid: Option<&str>,
    arm: Option<&str>,
    args: &RunArgs,
) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Effective<'a> {
        kind: Kind,
        grid: &'a str,
        #[serde(skip_serializing_if = "Option::is_none")]
        arm: Option<String>,
        #[serde(flatten)]
        run: &'a RunSettings,
    }
    let kind = kind.or(g.file.kind).ok_or_else(|| CliError::Usage("--kind is required".into()))?;
    let grid_spec = grid.or(g.file.grid.as_deref()).unwrap_or(config::DEFAULT_GRID);
    let strengths = config::parse_grid(grid_spec)?;
    let settings = RunSettings::resolve(args, &g.file)?;
    let arms: Option<ArmPair> = match kind {
        Kind::Fig3 => Some(arm.or(g.file.arm.as_deref()).unwrap_or("NO1,NO2").parse()?),
        _ => None,
    };
    let sweep_kind = match (kind, arms) {
        (Kind::Fig2, _) => SweepKind::Fig2Visibility,
        (Kind::Fig3, Some(arms)) => SweepKind::Fig3FixedArm { arms },
        _ => SweepKind::Fig4Hardy,
    };
    let mode = match settings.plan {
        None => SweepMode::Exact,
        Some(plan) => SweepMode::MonteCarlo { plan },
    };
    let result = sweep(&sweep_kind, &strengths, &mode, &settings.model)?;
    settings.write_records(&result.records)?;

    let arm_text = arms.map(|a| {
        let (x, y) = (ArmLabel { photon: 1, arm: a.first }, ArmLabel { photon: 2, arm: a.second });
        format!("{x},{y}")
    });
    let table = match kind {
        Kind::Fig2 => {
            let mut t = Table::new(["strength", "visibility", "err"]);
            for p in &result.points {
                let v = p.estimates[0];
                t.push(vec![p.strength.into(), v.value.into(), v.stderr.into()]);
            }
            t
        }
        Kind::Fig3 | Kind::Fig4 => {
            let names: Vec<String> = ArmPair::TABLE_ORDER.iter().map(|p| p.to_string()).collect();
            let mut cols: Vec<String> = Vec::new();
            if kind == Kind::Fig3 {
                cols.push("arm".into());
            }
            cols.push("strength".into());
            cols.extend(names.iter().map(|n| format!("R_{n}")));
            cols.extend(names.iter().map(|n| format!("err_{n}")));
            let mut t = Table::new(cols);
            for p in &result.points {
                let mut row: Vec<Cell> = Vec::new();
                if let Some(a) = &arm_text {
                    row.push(a.clone().into());
                }
                row.push(p.strength.into());
                row.extend(ArmPair::TABLE_ORDER.iter().map(|q| Cell::Num(p.estimates[q.index()].value)));
                row.extend(ArmPair::TABLE_ORDER.iter().map(|q| Cell::Num(p.estimates[q.index()].stderr)));
                t.push(row);
            }
            t
        }
    };
    let eff = Effective { kind, grid: grid_spec, arm: arm_text, run: &settings };
    finish(g, "sweep", settings.seed, &eff, &table)
}

fn cmd_selftest(g: &Globals, corrupt_splitter: bool) -> Result<(), CliError> {
    let results = run_selftest(&SelftestOptions { corrupt_splitter });
    let mut text = String::new();
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        text.push_str(&format!("{status} {:<28} {:>9.3} ms  {}\n", r.name, r.elapsed.as_secs_f64() * 1e3, r.detail));
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    text.push_str(&format!("{} passed, {failed} failed\n", results.len() - failed));
    output::emit(&text, g.output.as_deref())?;
    if failed > 0 {
        return Err(CliError::SelftestFailed(failed));
    }
    Ok(())
}

fn cmd_circuit(g: &Globals, input: Option<&std::path::Path>) -> Result<(), CliError> {
    let circuit = match input {
        None => HardyCircuit::calibrated(),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            HardyCircuit::from_json(&text)?
        }
    };
    let mut json = circuit.to_json()?;
    json.push('\n');
    output::emit(&json, g.output.as_deref())
}
