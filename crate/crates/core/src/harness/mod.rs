//! Experiment orchestration: plans, step tuning, sweeps, rate fits and
//! CSV/JSON artifacts.

mod experiment;
mod fit;
mod output;
mod plan;
pub mod record;
mod sweep;
mod tune;

pub use experiment::{expand_cells, run_experiment, Cell, ExperimentOutcome, RunOutcome};
pub use fit::{contraction_factor, rate_fit, DEFAULT_WINDOW, FIT_REQUIRES, MIN_FIT_POINTS};
pub use output::{
    csv_string, emit_csv, emit_summary, format_float, run_summary, write_atomic, write_csv, CSV_HEADER,
    SUMMARY_SCHEMA, SUMMARY_TARGETS,
};
pub use plan::{
    Auto, CostWeights, ExperimentPlan, GraphSource, InstanceSource, MethodSpec, RoundsSpec, Setup, StepSpec,
    StopSpec, SweepAxes, Tuned, DEFAULT_ALPHA0, DEFAULT_PERTURBATION, DEFAULT_SWEEP_TARGET, PLAN_SCHEMA_VERSION,
};
pub use record::{MetricsRow, RunDiagnostics, RunMeta, RunRecord, RunStatus};
pub use sweep::{iteration_spread, sweep_alpha0, sweep_inner_loops, SweepPoint, SweepResult};
pub use tune::{log_grid, tune_constant_step, tune_method, GridPoint, TuneOptions, TuneResult};
