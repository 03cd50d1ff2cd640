//! Emulated counting runs: meter preparation from the down-conversion
//! source, per-basis Bernoulli sampling, Poisson-propagated readout
//! estimates and strength sweeps.
//!
//! Sampling is split into `(basis, shard)` jobs with one ChaCha8 stream each,
//! so counts depend only on `(seed, shards)`. With the `parallel` feature the
//! jobs run on rayon; otherwise they run in order.

mod estimate;
mod exec;
mod sampling;
mod source;
mod sweep;

pub use estimate::{
    estimate_marginal, estimate_readouts, marginal_weights, readouts_from_probabilities, weighted_readout,
    EstimateWithError,
};
pub use exec::Execution;
pub use sampling::{
    prepared_meter, records_to_jsonl, run_counts, run_counts_salted, sample_counts, scenario_probabilities,
    BasisProbabilities, Counts, ImperfectionModel, RunRecord, Scenario, ShotPlan, TrialUnit,
};
pub use source::{halfwave_jones, meter_from_source, source_ket, SourceConfig};
pub use sweep::{fit_visibility, linear_grid, sweep, SweepKind, SweepMode, SweepPoint, SweepResult, FRINGE_POINTS};
