//! Two-timescale control: a macro planner picks a route, arrival window and
//! emission envelope per vessel every `tau_h` hours; the per-hour micro
//! policy acts inside that directive.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{FleetState, Observation, Position, TwinEnv};
use crate::error::{Error, Result};
use crate::learner::{decode_micro, featurize, PolicySpec};

pub const DEFAULT_TAU_H: u32 = 10;
pub const DEFAULT_WINDOW_OFFSETS: [i32; 4] = [-2, 0, 2, 4];
pub const DEFAULT_WINDOW_SLACK: u32 = 2;
pub const DEFAULT_CAP_DELTA: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselDirective {
    /// Rank of the chosen candidate route (0 = shortest).
    pub route_rank: usize,
    /// Ports from the vessel's next node to its destination.
    pub route: Vec<usize>,
    pub window_offset: i32,
    /// Step by which the vessel should arrive; lateness starts after
    /// `target_step + slack`.
    pub target_step: i64,
    pub slack: u32,
    /// Emission allowance (t CO2e) for this macro epoch.
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroAction {
    pub epoch: usize,
    pub directives: Vec<VesselDirective>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacroClock {
    pub tau_h: u32,
    pub horizon: u32,
}

impl MacroClock {
    pub fn new(tau_h: u32, horizon: u32) -> Result<Self> {
        if tau_h == 0 || horizon == 0 {
            return Err(Error::InvalidConfig("tau_h and horizon must be >= 1".into()));
        }
        Ok(Self { tau_h, horizon })
    }

    /// `k(t) = floor(t / tau_h)`.
    pub fn epoch(&self, t: u32) -> usize {
        macro_index(t, self.tau_h)
    }

    /// `K = ceil(T / tau_h)`.
    pub fn epochs(&self) -> usize {
        self.horizon.div_ceil(self.tau_h) as usize
    }

    pub fn is_decision_step(&self, t: u32) -> bool {
        t.is_multiple_of(self.tau_h)
    }

    /// Hours covered by epoch `k` (the last one may be short).
    pub fn epoch_len(&self, k: usize) -> u32 {
        let start = k as u32 * self.tau_h;
        self.tau_h.min(self.horizon.saturating_sub(start))
    }
}

pub fn macro_index(t: u32, tau_h: u32) -> usize {
    (t / tau_h) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HierarchyParams {
    pub tau_h: u32,
    pub window_offsets: Vec<i32>,
    pub window_slack: u32,
    pub cap_adapt: bool,
    pub cap_delta: f64,
}

impl Default for HierarchyParams {
    fn default() -> Self {
        Self {
            tau_h: DEFAULT_TAU_H,
            window_offsets: DEFAULT_WINDOW_OFFSETS.to_vec(),
            window_slack: DEFAULT_WINDOW_SLACK,
            cap_adapt: false,
            cap_delta: DEFAULT_CAP_DELTA,
        }
    }
}

impl HierarchyParams {
    pub fn validate(&self) -> Result<()> {
        if self.tau_h == 0 || self.window_offsets.is_empty() || !(0.0..1.0).contains(&self.cap_delta)
        {
            return Err(Error::InvalidConfig(format!("bad hierarchy parameters {self:?}")));
        }
        Ok(())
    }

    /// High-level action count: route ranks x window offsets.
    pub fn macro_actions(&self, route_candidates: usize) -> usize {
        route_candidates * self.window_offsets.len()
    }
}

/// Aggregate public state seen by the planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighLevelContext {
    pub t: u32,
    pub epoch: usize,
    pub epoch_len: u32,
    pub horizon: u32,
    pub budget: f64,
    pub emissions_so_far: f64,
    pub mean_berth_queue_ratio: f64,
    pub max_berth_queue_ratio: f64,
    pub storm_share: f64,
    pub swell_share: f64,
    pub phi: f64,
    pub mean_cost: f64,
}

impl HighLevelContext {
    pub fn from_state(
        state: &FleetState,
        clock: &MacroClock,
        budget: f64,
        phi: f64,
    ) -> Self {
        let ratios: Vec<f64> = state
            .ports
            .iter()
            .map(|p| p.berth_queue.len() as f64 / p.berth_capacity as f64)
            .collect();
        let regions = state.weather.regions.len().max(1) as f64;
        let share = |s| state.weather.regions.iter().filter(|&&r| r == s).count() as f64 / regions;
        let n = state.cumulative_cost.len().max(1) as f64;
        let epoch = clock.epoch(state.t);
        Self {
            t: state.t,
            epoch,
            epoch_len: clock.epoch_len(epoch),
            horizon: clock.horizon,
            budget,
            emissions_so_far: state.cumulative_emissions,
            mean_berth_queue_ratio: ratios.iter().sum::<f64>() / ratios.len().max(1) as f64,
            max_berth_queue_ratio: ratios.iter().copied().fold(0.0, f64::max),
            storm_share: share(crate::env::Scenario::Storm),
            swell_share: share(crate::env::Scenario::Swell),
            phi,
            mean_cost: state.cumulative_cost.iter().sum::<f64>() / n,
        }
    }

    /// Window share of the budget, never more than what is left.
    pub fn window_budget(&self) -> f64 {
        let share = self.budget * self.epoch_len as f64 / self.horizon as f64;
        share.min((self.budget - self.emissions_so_far).max(0.0))
    }
}

/// Length of [`featurize_high`] output.
///
/// Ordering: 0 bias, 1 mean berth queue ratio, 2 max berth queue ratio
/// (capped at 3), 3 budget used `E_t / B` (capped at 2), 4 elapsed fraction
/// `t / T`, 5 storm share, 6 swell share, 7 fairness value, 8 vessel cost
/// relative to the fleet mean minus 1 (in [-1, 1]), 9 hull coefficient / 2,
/// 10 remaining distance over one epoch of nominal sailing (capped at 3).
pub const HIGH_FEATURES: usize = 11;

pub fn featurize_high(
    ctx: &HighLevelContext,
    env: &TwinEnv,
    state: &FleetState,
    vessel: usize,
) -> Vec<f64> {
    let v = &state.vessels[vessel];
    let epoch_nm = env.config().physics.reference_speed_knots * ctx.epoch_len.max(1) as f64;
    let rel_cost = if ctx.mean_cost > 0.0 {
        (state.cumulative_cost[vessel] / ctx.mean_cost - 1.0).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    vec![
        1.0,
        ctx.mean_berth_queue_ratio.min(3.0),
        ctx.max_berth_queue_ratio.min(3.0),
        if ctx.budget > 0.0 {
            (ctx.emissions_so_far / ctx.budget).min(2.0)
        } else {
            0.0
        },
        ctx.t as f64 / ctx.horizon as f64,
        ctx.storm_share,
        ctx.swell_share,
        ctx.phi,
        rel_cost,
        v.hull_coefficient / 2.0,
        (env.remaining_nm(v) / epoch_nm).min(3.0),
    ]
}

/// Splits `budget` across vessels in proportion to forecast distances.
/// Zero total distance splits equally. The last vessel absorbs rounding so
/// the envelopes never sum above `budget`.
pub fn allocate_budget(budget: f64, distances: &[f64]) -> Result<Vec<f64>> {
    if !(budget >= 0.0 && budget.is_finite()) {
        return Err(Error::Domain(format!("budget {budget} must be finite and >= 0")));
    }
    if let Some(d) = distances.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(Error::Domain(format!("forecast distance {d} must be >= 0")));
    }
    let n = distances.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let total: f64 = distances.iter().sum();
    let mut out: Vec<f64> = if total > 0.0 {
        distances.iter().map(|d| budget * d / total).collect()
    } else {
        vec![budget / n as f64; n]
    };
    let head: f64 = out[..n - 1].iter().sum();
    let mut last = (budget - head).max(0.0);
    while head + last > budget && last > 0.0 {
        last = last.next_down();
    }
    out[n - 1] = last;
    Ok(out)
}

/// Outcome of one planner decision for one vessel, kept for learning.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroSample {
    pub vessel: usize,
    pub features: Vec<f64>,
    pub action: usize,
}

/// Directive that keeps `vessel` on its shortest route with the nominal
/// window, used when the planner is switched off.
pub fn default_directive(
    env: &TwinEnv,
    state: &FleetState,
    vessel: usize,
    slack: u32,
    envelope: f64,
) -> Result<VesselDirective> {
    directive_for(env, state, vessel, 0, 0, slack, envelope)
}

fn directive_for(
    env: &TwinEnv,
    state: &FleetState,
    vessel: usize,
    rank: usize,
    offset: i32,
    slack: u32,
    envelope: f64,
) -> Result<VesselDirective> {
    let v = &state.vessels[vessel];
    let here = v.next_node();
    let dest = v.destination();
    if v.arrived {
        return Ok(VesselDirective {
            route_rank: 0,
            route: vec![here],
            window_offset: v.plan.window_offset,
            target_step: v.plan.target_step,
            slack,
            envelope,
        });
    }
    let candidates = env.candidate_routes(here, dest);
    if candidates.is_empty() {
        return Err(Error::NoRoute {
            from: here,
            to: dest,
        });
    }
    let rank = rank.min(candidates.len() - 1);
    let path = &candidates[rank];
    // the window stays anchored to the voyage's shortest-route ETA
    let nominal = v.plan.target_step - v.plan.window_offset as i64;
    Ok(VesselDirective {
        route_rank: rank,
        route: path.ports.clone(),
        window_offset: offset,
        target_step: nominal + offset as i64,
        slack,
        envelope,
    })
}

/// Distance a vessel can plausibly cover in the epoch along `route`.
fn forecast_nm(env: &TwinEnv, state: &FleetState, vessel: usize, d: &VesselDirective, len: u32) -> f64 {
    let v = &state.vessels[vessel];
    if v.arrived {
        return 0.0;
    }
    let lane_left = match &v.position {
        Position::Transit {
            travelled_nm,
            length_nm,
            ..
        } => (length_nm - travelled_nm).max(0.0),
        Position::Docked { .. } => 0.0,
    };
    let route_nm = env.network().path_nm(&d.route).unwrap_or(0.0);
    let reach = env.config().physics.reference_speed_knots * len as f64;
    (lane_left + route_nm).min(reach)
}

/// Fills in envelopes from the window budget.
pub fn assign_envelopes(
    env: &TwinEnv,
    state: &FleetState,
    ctx: &HighLevelContext,
    directives: &mut [VesselDirective],
) -> Result<()> {
    let distances: Vec<f64> = directives
        .iter()
        .enumerate()
        .map(|(i, d)| forecast_nm(env, state, i, d, ctx.epoch_len))
        .collect();
    let envelopes = allocate_budget(ctx.window_budget(), &distances)?;
    for (d, e) in directives.iter_mut().zip(envelopes) {
        d.envelope = e;
    }
    Ok(())
}

/// One planner decision per vessel from the shared high-level policy.
pub fn macro_decide(
    policy: &PolicySpec,
    env: &TwinEnv,
    state: &FleetState,
    ctx: &HighLevelContext,
    params: &HierarchyParams,
    rng: &mut impl Rng,
) -> Result<(MacroAction, Vec<MacroSample>)> {
    let offsets = &params.window_offsets;
    let mut directives = Vec::with_capacity(state.vessels.len());
    let mut samples = Vec::with_capacity(state.vessels.len());
    for i in 0..state.vessels.len() {
        let x = featurize_high(ctx, env, state, i);
        let (a, _) = policy.act(&x, rng)?;
        let rank = a / offsets.len();
        let offset = offsets[a % offsets.len()];
        directives.push(directive_for(
            env,
            state,
            i,
            rank,
            offset,
            params.window_slack,
            0.0,
        )?);
        samples.push(MacroSample {
            vessel: i,
            features: x,
            action: a,
        });
    }
    assign_envelopes(env, state, ctx, &mut directives)?;
    Ok((
        MacroAction {
            epoch: ctx.epoch,
            directives,
        },
        samples,
    ))
}

/// Fixed macro with shortest routes and nominal windows.
pub fn default_macro(
    env: &TwinEnv,
    state: &FleetState,
    ctx: &HighLevelContext,
    params: &HierarchyParams,
) -> Result<MacroAction> {
    let mut directives = (0..state.vessels.len())
        .map(|i| default_directive(env, state, i, params.window_slack, 0.0))
        .collect::<Result<Vec<_>>>()?;
    assign_envelopes(env, state, ctx, &mut directives)?;
    Ok(MacroAction {
        epoch: ctx.epoch,
        directives,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroDecision {
    pub action: crate::env::MicroAction,
    pub index: usize,
    pub log_prob: f64,
    pub features: Vec<f64>,
}

/// Samples a low-level action for one vessel.
pub fn micro_decide(
    policy: &PolicySpec,
    obs: &Observation,
    macro_action: &MacroAction,
    rng: &mut impl Rng,
) -> Result<MicroDecision> {
    let features = featurize(obs, macro_action);
    let (index, log_prob) = policy.act(&features, rng)?;
    Ok(MicroDecision {
        action: decode_micro(index),
        index,
        log_prob,
        features,
    })
}

/// Optional cap adaptation: tighten by `delta` while the fleet is fair and
/// within budget, relax by `delta` otherwise.
pub fn adapt_cap(cap: f64, gini: f64, zeta: f64, feasible: bool, enabled: bool, delta: f64) -> f64 {
    if !enabled {
        return cap;
    }
    if gini <= zeta && feasible {
        cap * (1.0 - delta)
    } else {
        cap * (1.0 + delta)
    }
}
