//! Experiment plumbing: run configs, the training loop, CSV output,
//! aggregation, regret fixtures and the scaling probe.

pub mod aggregate;
pub mod config;
pub mod experiment;
pub mod output;
pub mod regret;
pub mod runner;
pub mod scaling;

pub use aggregate::{aggregate, aggregate_dir, plot_data, plot_data_dir, MetricSummary};
pub use config::{ConstraintParams, EnvSource, RunConfig};
pub use experiment::{
    build_env, resolve_budget, run_experiment, run_mode, run_modes, write_outcome,
    ExperimentOutcome, SeedOutcome, THREADS_ENV,
};
pub use output::{fmt_g, read_run_dir, EpisodeRecord};
pub use regret::{verify_regret, RegretKind, RegretReport};
pub use runner::{episode_seed, Phase, SeedRun, TraceEntry};
pub use scaling::{resize_fleet, scale_probe, ScalingPoint, ScalingReport};
