//! Regret, cost and comparator bookkeeping, plus experiment drivers.

mod comparator;
mod counterexample;
mod cost;
mod regret;
mod run;
mod sweep;

pub use comparator::{
    best_linear, comparator_fit, comparator_targets, Comparator, ComparatorKind, OracleFn,
    DEFAULT_COMPARATOR_DEPTH,
};
pub use counterexample::{
    accumulated_square_loss, brute_force_leader, counterexample_run, write_counterexample, CounterexampleConfig,
    CounterexampleReport, ResidualObservation, WeightedAbs, AXIS_CAP, DEFAULT_COUNTEREXAMPLE_ETA,
};
pub use cost::CostCounter;
pub use regret::{RegretRecord, RegretTracker};
pub use run::{run, test_risk, EtaChoice, RunOutcome, RunSpec, StepLog, TrainedModel};
pub use sweep::{
    fmt_num, sweep_n, sweep_t, write_step_log, write_sweep_n, write_sweep_t, SweepNRow, SweepTRow,
};
