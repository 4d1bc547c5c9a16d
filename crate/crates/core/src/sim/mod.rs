//! Seeded Monte Carlo experiments comparing empirical error frequencies with
//! the theoretical bounds.

pub mod exec;
pub mod experiments;
pub mod report;
pub mod spec;
pub mod stats;

pub use exec::{map_trials, trial_rng, Execution};
pub use experiments::{
    run_agnostic_rate, run_convergence_rate, run_ddim_slope, run_expected_distance, run_experiment,
    run_posterior_ddim_trace, run_type1, run_type2,
};
pub use report::{BoundInputs, ExperimentReport, ReportRow, SCHEMA_VERSION};
pub use spec::{
    Experiment, ExperimentKind, ExperimentSpec, ReferencePlan, SourcePlan, StreamPart, TestMode,
};
pub use stats::{wilson95, wilson_interval, BoundStatus};
