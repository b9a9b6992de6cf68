//! Training loop for one seed.
//!
//! Per hour: planner decision at epoch starts, observe, act, env step, dual
//! update, fairness-weight update, reward shaping, store. Policies are
//! updated once per episode.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::RunConfig;
use super::output::{EpisodeRecord, MacroRow};
use crate::constraint::ConstraintLedger;
use crate::env::{MicroAction, TwinEnv};
use crate::error::{Error, Result};
use crate::fairness::{apply_fairness_penalty, gini, minmax, FairnessState};
use crate::hierarchy::{
    adapt_cap, default_macro, macro_decide, HighLevelContext, MacroAction, MacroClock,
    MacroSample, HIGH_FEATURES,
};
use crate::learner::{
    configure_baseline, decode_micro, featurize, featurize_centralised, micro_action_count,
    BaselineMode, ModeSettings, PolicySpec, Trajectory, Transition, LOW_FEATURES,
};

/// Phases of the hourly loop, recorded when tracing is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Macro,
    Observe,
    Act,
    EnvStep,
    DualUpdate,
    BetaUpdate,
    Shape,
    Store,
    LearnerUpdate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub t: u32,
    pub phase: Phase,
}

/// Deterministic per-episode environment seed.
pub fn episode_seed(seed: u64, episode: usize) -> u64 {
    let mut z = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(episode as u64)
        .wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct SeedRun<'a> {
    env: &'a TwinEnv,
    cfg: &'a RunConfig,
    pub settings: ModeSettings,
    pub seed: u64,
    pub budget: f64,
    clock: MacroClock,
    pub ledger: ConstraintLedger,
    pub fairness: FairnessState,
    pub low: PolicySpec,
    pub high: PolicySpec,
    agent_rngs: Vec<ChaCha8Rng>,
    planner_rng: ChaCha8Rng,
    global_step: u64,
    episode: usize,
    trace: Option<Vec<TraceEntry>>,
    macro_log: Option<Vec<MacroRow>>,
    /// Post-resolution occupancy above capacity, counted independently of
    /// the environment's own check.
    pub capacity_violations: u64,
}

impl<'a> SeedRun<'a> {
    pub fn new(
        env: &'a TwinEnv,
        cfg: &'a RunConfig,
        mode: BaselineMode,
        seed: u64,
        budget: f64,
    ) -> Result<Self> {
        cfg.validate()?;
        let settings = configure_baseline(mode);
        let n = env.num_vessels();
        let tau = if settings.hierarchy {
            cfg.hierarchy.tau_h
        } else {
            cfg.horizon
        };
        let clock = MacroClock::new(tau, cfg.horizon)?;
        let mut ledger = ConstraintLedger::new(budget, cfg.horizon, env.num_ports(), cfg.constraint.eta_base)?
            .with_window(cfg.constraint.window)?
            .with_lambda_max(cfg.constraint.lambda_max);
        ledger.pricing_enabled = settings.constraints;
        let mut fairness = FairnessState::new(cfg.fairness.clone())?;
        fairness.enabled = settings.fairness;
        let low_features = if settings.centralised {
            n * LOW_FEATURES
        } else {
            LOW_FEATURES
        };
        let low = PolicySpec::zeros(
            low_features,
            micro_action_count(env.speed_grid().len()),
            cfg.learner.clone(),
        )?;
        let high = PolicySpec::zeros(
            HIGH_FEATURES,
            cfg.hierarchy.macro_actions(cfg.route_candidates),
            cfg.learner.clone(),
        )?;
        let agent_rngs = (0..n)
            .map(|i| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                r.set_stream(i as u64 + 2);
                r
            })
            .collect();
        let mut planner_rng = ChaCha8Rng::seed_from_u64(seed);
        planner_rng.set_stream(1);
        Ok(Self {
            env,
            cfg,
            settings,
            seed,
            budget,
            clock,
            ledger,
            fairness,
            low,
            high,
            agent_rngs,
            planner_rng,
            global_step: 0,
            episode: 0,
            trace: None,
            macro_log: None,
            capacity_violations: 0,
        })
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<TraceEntry> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn enable_macro_log(&mut self) {
        self.macro_log = Some(Vec::new());
    }

    pub fn take_macro_log(&mut self) -> Vec<MacroRow> {
        self.macro_log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn episodes_run(&self) -> usize {
        self.episode
    }

    fn mark(&mut self, t: u32, phase: Phase) {
        if let Some(tr) = self.trace.as_mut() {
            tr.push(TraceEntry { t, phase });
        }
    }

    fn log_macro(&mut self, m: &MacroAction) {
        if let Some(log) = self.macro_log.as_mut() {
            for (vessel, d) in m.directives.iter().enumerate() {
                log.push(MacroRow {
                    episode: self.episode,
                    epoch: m.epoch,
                    vessel,
                    route_rank: d.route_rank,
                    window_offset: d.window_offset,
                    target_step: d.target_step,
                    envelope: d.envelope,
                });
            }
        }
    }

    pub fn run(&mut self, episodes: usize) -> Result<Vec<EpisodeRecord>> {
        (0..episodes).map(|_| self.run_episode()).collect()
    }

    pub fn run_episode(&mut self) -> Result<EpisodeRecord> {
        let env = self.env;
        let n = env.num_vessels();
        let horizon = self.cfg.horizon;
        let mut state = env.reset(episode_seed(self.seed, self.episode));
        let mut low_traj: Vec<Trajectory> = vec![Vec::with_capacity(horizon as usize); n];
        let mut high_traj: Vec<Trajectory> = vec![Vec::new(); n];
        let mut pending: Vec<MacroSample> = Vec::new();
        let mut window_reward = vec![0.0; n];
        let mut current: Option<MacroAction> = None;
        let (mut raw_total, mut priced_total, mut shaped_total) = (0.0, 0.0, 0.0);
        let mut actions = vec![MicroAction::idle(); n];
        let mut picks = vec![0usize; n];

        for t in 0..horizon {
            if current.is_none() || (self.settings.hierarchy && self.clock.is_decision_step(t)) {
                flush_window(&mut pending, &mut window_reward, &mut high_traj);
                let ctx = HighLevelContext::from_state(
                    &state,
                    &self.clock,
                    self.budget,
                    self.fairness.last_phi,
                );
                let m = if self.settings.hierarchy {
                    let (m, samples) = macro_decide(
                        &self.high,
                        env,
                        &state,
                        &ctx,
                        &self.cfg.hierarchy,
                        &mut self.planner_rng,
                    )?;
                    pending = samples;
                    m
                } else {
                    default_macro(env, &state, &ctx, &self.cfg.hierarchy)?
                };
                self.log_macro(&m);
                self.mark(t, Phase::Macro);
                current = Some(m);
            }
            let m = current.as_ref().expect("macro set above");

            let obs = (0..n)
                .map(|i| env.observe(&state, i, m))
                .collect::<Result<Vec<_>>>()?;
            self.mark(t, Phase::Observe);
            let blocks: Vec<Vec<f64>> = obs.iter().map(|o| featurize(o, m)).collect();
            let mut features: Vec<Vec<f64>> = if self.settings.centralised {
                (0..n).map(|i| featurize_centralised(&blocks, i)).collect()
            } else {
                blocks
            };
            for i in 0..n {
                let (a, _) = self.low.act(&features[i], &mut self.agent_rngs[i])?;
                picks[i] = a;
                actions[i] = decode_micro(a);
            }
            self.mark(t, Phase::Act);

            let metrics = env.step(&mut state, &actions, m)?;
            self.mark(t, Phase::EnvStep);
            for (p, port) in state.ports.iter().enumerate() {
                if metrics.berth_occupancy[p] > port.berth_capacity
                    || metrics.crane_occupancy[p] > port.crane_capacity
                {
                    self.capacity_violations += 1;
                }
            }

            self.ledger.update_dual_emission(metrics.emissions, t)?;
            self.ledger
                .update_dual_capacity(&metrics.berth_overflow, &metrics.crane_overflow, t)?;
            self.mark(t, Phase::DualUpdate);

            let phi = self.fairness.update(&state.cumulative_cost, self.global_step)?;
            self.mark(t, Phase::BetaUpdate);

            let priced: Vec<f64> = metrics
                .rewards
                .iter()
                .map(|&r| {
                    self.ledger.price_reward(
                        r,
                        metrics.emissions,
                        &metrics.berth_overflow,
                        &metrics.crane_overflow,
                    )
                })
                .collect();
            let mut shaped = priced.clone();
            apply_fairness_penalty(&mut shaped, self.fairness.beta, phi);
            self.mark(t, Phase::Shape);

            for i in 0..n {
                raw_total += metrics.rewards[i];
                priced_total += priced[i];
                shaped_total += shaped[i];
                window_reward[i] += shaped[i];
                low_traj[i].push(Transition {
                    features: std::mem::take(&mut features[i]),
                    action: picks[i],
                    reward: shaped[i],
                });
            }
            self.mark(t, Phase::Store);
            self.global_step += 1;
        }
        flush_window(&mut pending, &mut window_reward, &mut high_traj);

        let low_stats = self.low.update(&low_traj)?;
        if !low_stats.grad_norm.is_finite() {
            return Err(Error::NonFiniteGradient("low-level update".into()));
        }
        if self.settings.hierarchy {
            self.high.update(&high_traj)?;
        }
        self.mark(horizon, Phase::LearnerUpdate);

        let e_total = state.cumulative_emissions;
        let g = gini(&state.cumulative_cost)?;
        let record = EpisodeRecord {
            episode: self.episode,
            seed: self.seed,
            total_return: raw_total,
            emissions_total: e_total,
            cap: self.budget,
            violation_excess: (e_total - self.budget).max(0.0),
            gini: g,
            minmax: minmax(&state.cumulative_cost)?,
            throughput: state.voyages_completed as f64,
            waiting_hours: state.waiting_hours,
            lambda_final: self.ledger.lambda,
            beta_final: self.fairness.beta,
            max_mu: self.ledger.max_mu(),
            max_nu: self.ledger.max_nu(),
            shaped_return: shaped_total,
            priced_return: priced_total,
        };
        if !self.ledger.all_nonnegative() {
            return Err(Error::Invariant("negative dual after projection".into()));
        }
        self.ledger.reset_episode(self.cfg.constraint.persistence);
        if self.cfg.hierarchy.cap_adapt {
            self.budget = adapt_cap(
                self.budget,
                g,
                self.cfg.fairness.zeta,
                e_total <= self.budget,
                true,
                self.cfg.hierarchy.cap_delta,
            );
            self.ledger.budget = self.budget;
        }
        self.episode += 1;
        Ok(record)
    }
}

/// Closes the current planner epoch: each vessel's decision earns the sum of
/// its shaped rewards over the epoch.
fn flush_window(pending: &mut Vec<MacroSample>, window_reward: &mut [f64], high: &mut [Trajectory]) {
    for s in pending.drain(..) {
        high[s.vessel].push(Transition {
            features: s.features,
            action: s.action,
            reward: window_reward[s.vessel],
        });
    }
    window_reward.iter_mut().for_each(|r| *r = 0.0);
}
