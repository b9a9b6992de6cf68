//! Multi-seed experiments, budget calibration and output files.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::aggregate::{aggregate, plot_data, write_aggregate, write_plot_data};
use super::config::RunConfig;
use super::output::{episodes_file, macro_file, write_episodes, write_macro_rows, EpisodeRecord, MacroRow};
use super::runner::SeedRun;
use crate::env::TwinEnv;
use crate::error::{Error, Result};
use crate::learner::{BaselineMode, PolicySpec};

/// Worker-count bound from `ECOFAIR_THREADS`.
pub const THREADS_ENV: &str = "ECOFAIR_THREADS";

#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub records: Vec<EpisodeRecord>,
    pub macro_rows: Vec<MacroRow>,
    pub capacity_violations: u64,
    pub low_policy: PolicySpec,
    pub high_policy: PolicySpec,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub mode: BaselineMode,
    pub budget: f64,
    pub seeds: Vec<SeedOutcome>,
}

impl ExperimentOutcome {
    pub fn capacity_violations(&self) -> u64 {
        self.seeds.iter().map(|s| s.capacity_violations).sum()
    }

    pub fn records(&self, seed: u64) -> Option<&[EpisodeRecord]> {
        self.seeds
            .iter()
            .find(|s| s.seed == seed)
            .map(|s| s.records.as_slice())
    }
}

pub fn build_env(cfg: &RunConfig) -> Result<TwinEnv> {
    TwinEnv::with_route_candidates(cfg.env_config()?, cfg.route_candidates)
}

/// Thread count requested through [`THREADS_ENV`], if any.
pub fn requested_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::InvalidConfig(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = requested_threads()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Emissions budget for a run: the configured value, or a fraction of the
/// mean episode emissions of an unconstrained probe on the first seed.
pub fn resolve_budget(env: &TwinEnv, cfg: &RunConfig) -> Result<f64> {
    if let Some(b) = cfg.constraint.budget {
        return Ok(b);
    }
    let never_binding = env.emission_bound() * cfg.horizon as f64;
    let mut probe = SeedRun::new(env, cfg, BaselineMode::NoConstraints, cfg.seeds[0], never_binding)?;
    let records = probe.run(cfg.constraint.calibration_episodes)?;
    let mean = records.iter().map(|r| r.emissions_total).sum::<f64>() / records.len() as f64;
    Ok(cfg.constraint.calibration_fraction * mean)
}

fn run_seed(
    env: &TwinEnv,
    cfg: &RunConfig,
    mode: BaselineMode,
    seed: u64,
    budget: f64,
    log_macro: bool,
) -> Result<SeedOutcome> {
    let mut run = SeedRun::new(env, cfg, mode, seed, budget)?;
    if log_macro {
        run.enable_macro_log();
    }
    let records = run.run(cfg.episodes)?;
    Ok(SeedOutcome {
        seed,
        records,
        macro_rows: run.take_macro_log(),
        capacity_violations: run.capacity_violations,
        low_policy: run.low.clone(),
        high_policy: run.high.clone(),
    })
}

/// Runs every configured seed of `mode` against a fixed budget.
pub fn run_mode(
    env: &TwinEnv,
    cfg: &RunConfig,
    mode: BaselineMode,
    budget: f64,
    log_macro: bool,
) -> Result<ExperimentOutcome> {
    let seeds = with_pool(|| {
        cfg.seeds
            .par_iter()
            .map(|&s| run_seed(env, cfg, mode, s, budget, log_macro))
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(ExperimentOutcome {
        mode,
        budget,
        seeds,
    })
}

/// Calibrates (or reads) the budget, then runs the configured mode.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutcome> {
    let env = build_env(cfg)?;
    let budget = resolve_budget(&env, cfg)?;
    run_mode(&env, cfg, cfg.mode, budget, cfg.output_dir.is_some())
}

/// Runs several modes against one shared budget.
pub fn run_modes(cfg: &RunConfig, modes: &[BaselineMode]) -> Result<Vec<ExperimentOutcome>> {
    let env = build_env(cfg)?;
    let budget = resolve_budget(&env, cfg)?;
    modes
        .iter()
        .map(|&m| run_mode(&env, cfg, m, budget, false))
        .collect()
}

/// Writes per-seed episode and macro CSVs, final policy checkpoints, the
/// aggregate table and the plot table. Returns the files written.
pub fn write_outcome(outcome: &ExperimentOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for s in &outcome.seeds {
        let p = episodes_file(dir, s.seed);
        write_episodes(&p, &s.records)?;
        written.push(p);
        if !s.macro_rows.is_empty() {
            let p = macro_file(dir, s.seed);
            write_macro_rows(&p, &s.macro_rows)?;
            written.push(p);
        }
        let p = dir.join(format!("policy_low_seed{}.txt", s.seed));
        s.low_policy.save(&p)?;
        written.push(p);
        let p = dir.join(format!("policy_high_seed{}.txt", s.seed));
        s.high_policy.save(&p)?;
        written.push(p);
    }
    let runs = outcome
        .seeds
        .iter()
        .map(|s| (s.seed, s.records.clone()))
        .collect();
    let p = dir.join("aggregate.csv");
    write_aggregate(&p, &aggregate(&runs)?)?;
    written.push(p);
    let p = dir.join("plot_data.csv");
    write_plot_data(&p, &plot_data(&runs)?)?;
    written.push(p);
    Ok(written)
}
