//! Hourly maritime digital twin.
//!
//! [`TwinEnv`] holds the immutable network, weather model and prices;
//! [`FleetState`] holds everything that changes. All mutation goes through
//! [`TwinEnv::step`].

pub mod config;
pub mod generator;
pub mod network;
pub mod port;
pub mod vessel;
pub mod weather;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use config::EnvConfig;
pub use network::{Path, PortNetwork};
pub use port::{Port, Resolution};
pub use vessel::{fuel_rate, PortPhase, Position, Vessel, VoyagePlan};
pub use weather::{LocalWeather, Scenario, WeatherModel, WeatherState};

use crate::error::{Error, Result};
use crate::hierarchy::{MacroAction, VesselDirective};

/// Default number of candidate routes per origin-destination pair.
pub const ROUTE_CANDIDATES: usize = 3;
/// Destinations are drawn among ports at most this many lanes away.
const JOB_HOPS: usize = 2;
const JOBS_PER_VESSEL: usize = 16;
const BOUND_EPS: f64 = 1e-9;

/// Per-vessel low-level control for one hour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MicroAction {
    /// Index into the speed grid (fractions of the current v_max).
    pub speed_index: usize,
    pub berth_request: bool,
    pub crane_request: bool,
    /// Stretch the rest of the current leg to avoid weather. Ignored when docked.
    pub detour: bool,
}

impl MicroAction {
    pub fn idle() -> Self {
        Self {
            speed_index: 0,
            berth_request: false,
            crane_request: false,
            detour: false,
        }
    }
}

/// Local view of one vessel. Carries only the vessel's own private fields
/// plus public state of its local port and weather region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub agent: usize,
    pub t: u32,
    pub speed: f64,
    pub v_ref: f64,
    pub v_max: f64,
    pub current_v_max: f64,
    pub hull_coefficient: f64,
    pub fuel_level: f64,
    pub fuel_capacity: f64,
    pub healthy: bool,
    pub docked_phase: Option<PortPhase>,
    pub lane_fraction: f64,
    pub remaining_nm: f64,
    /// Current port when docked, otherwise the port at the end of the lane.
    pub local_port: usize,
    pub local_berth_queue: usize,
    pub local_berth_occupied: u32,
    pub local_berth_capacity: u32,
    pub local_crane_queue: usize,
    pub local_crane_occupied: u32,
    pub local_crane_capacity: u32,
    pub weather: Scenario,
    pub directive: VesselDirective,
    pub hours_to_window_close: f64,
    pub nominal_hours_remaining: f64,
    pub arrived: bool,
    pub window_emissions: f64,
    pub cumulative_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// Fleet emissions this hour (t CO2e).
    pub emissions: f64,
    pub vessel_emissions: Vec<f64>,
    pub vessel_fuel: Vec<f64>,
    /// `[q - C]+` per port, before resolution.
    pub berth_overflow: Vec<u32>,
    pub crane_overflow: Vec<u32>,
    /// Occupancy after resolution.
    pub berth_occupancy: Vec<u32>,
    pub crane_occupancy: Vec<u32>,
    /// Instantaneous per-vessel cost, the negated raw reward.
    pub costs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub voyages_completed: u32,
    /// Queue waiting hours accrued this step (berth and crane queues).
    pub waiting_hours: f64,
    pub late_hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetState {
    pub t: u32,
    pub vessels: Vec<Vessel>,
    pub ports: Vec<Port>,
    pub weather: WeatherState,
    /// `E_t`: sum of all logged step emissions so far.
    pub cumulative_emissions: f64,
    /// Per-vessel cumulative cost `c_i`.
    pub cumulative_cost: Vec<f64>,
    pub voyages_completed: u64,
    pub waiting_hours: f64,
    pub active_epoch: Option<usize>,
    #[serde(skip, default = "dummy_rng")]
    rng: ChaCha8Rng,
}

fn dummy_rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0)
}

impl FleetState {
    pub fn num_vessels(&self) -> usize {
        self.vessels.len()
    }
}

#[derive(Debug, Clone)]
pub struct TwinEnv {
    config: EnvConfig,
    network: PortNetwork,
    weather: WeatherModel,
    emission_bound: f64,
    /// `routes[from][to]`: up to `ROUTE_CANDIDATES` shortest loopless paths.
    routes: Vec<Vec<Vec<Path>>>,
}

impl TwinEnv {
    pub fn new(config: EnvConfig) -> Result<Self> {
        Self::with_route_candidates(config, ROUTE_CANDIDATES)
    }

    pub fn with_route_candidates(config: EnvConfig, k: usize) -> Result<Self> {
        config.validate()?;
        if k == 0 {
            return Err(Error::InvalidConfig("route candidate count must be >= 1".into()));
        }
        let network = PortNetwork::from_config(&config);
        let weather = WeatherModel::new(&config.weather)?;
        let n = network.port_count();
        let routes = (0..n)
            .map(|from| {
                (0..n)
                    .map(|to| network.k_shortest_paths(from, to, k).unwrap_or_default())
                    .collect()
            })
            .collect();
        let emission_bound = config.emission_bound();
        Ok(Self {
            config,
            network,
            weather,
            emission_bound,
            routes,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn network(&self) -> &PortNetwork {
        &self.network
    }

    pub fn weather_model(&self) -> &WeatherModel {
        &self.weather
    }

    pub fn emission_bound(&self) -> f64 {
        self.emission_bound
    }

    pub fn num_vessels(&self) -> usize {
        self.config.vessels.len()
    }

    pub fn num_ports(&self) -> usize {
        self.network.port_count()
    }

    pub fn speed_grid(&self) -> &[f64] {
        &self.config.physics.speed_grid
    }

    /// Candidate routes (shortest first) between two ports.
    pub fn candidate_routes(&self, from: usize, to: usize) -> &[Path] {
        &self.routes[from][to]
    }

    /// Reference hours to cover `nm` nautical miles.
    pub fn nominal_hours(&self, nm: f64) -> f64 {
        nm / self.config.physics.reference_speed_knots
    }

    /// Nominal distance still to sail for `vessel` along its current route.
    pub fn remaining_nm(&self, vessel: &Vessel) -> f64 {
        let (start, lane_left) = match &vessel.position {
            Position::Docked { port, .. } => (*port, 0.0),
            Position::Transit {
                to,
                travelled_nm,
                length_nm,
                ..
            } => (*to, (length_nm - travelled_nm).max(0.0)),
        };
        let mut nm = lane_left;
        let mut prev = start;
        for &p in vessel.route.iter() {
            if p == prev {
                continue;
            }
            if let Some(li) = self.network.lane_between(prev, p) {
                nm += self.network.lanes[li].nm;
            }
            prev = p;
        }
        nm
    }

    fn region_of(&self, lane: usize) -> usize {
        self.network.lanes[lane].region.index()
    }

    /// Weather experienced by `vessel` this hour.
    pub fn local_weather(&self, state: &FleetState, vessel: &Vessel) -> LocalWeather {
        match &vessel.position {
            Position::Transit { lane, detoured, .. } => {
                let s = state.weather.regions[self.region_of(*lane)];
                self.weather.local(if *detoured { s.milder() } else { s })
            }
            Position::Docked { port, .. } => {
                // a docked vessel reports the weather of the first lane ahead,
                // or of any lane touching the port
                let lane = vessel
                    .route
                    .front()
                    .and_then(|&to| self.network.lane_between(*port, to))
                    .or_else(|| {
                        self.network
                            .lanes
                            .iter()
                            .position(|l| l.from == *port || l.to == *port)
                    })
                    .expect("validated network has a lane at every port");
                self.weather.local(state.weather.regions[self.region_of(lane)])
            }
        }
    }

    fn draw_jobs(&self, start: usize, rng: &mut impl Rng) -> Vec<usize> {
        let mut jobs = Vec::with_capacity(JOBS_PER_VESSEL);
        let mut prev = start;
        for _ in 0..JOBS_PER_VESSEL {
            let options: Vec<usize> = self
                .network
                .within_hops(prev, JOB_HOPS)
                .into_iter()
                .filter(|&p| !self.routes[prev][p].is_empty())
                .collect();
            let next = if options.is_empty() {
                prev
            } else {
                options[rng.random_range(0..options.len())]
            };
            jobs.push(next);
            prev = next;
        }
        jobs
    }

    /// Fresh state for `seed`. Identical `(config, seed)` pairs give
    /// identical states.
    pub fn reset(&self, seed: u64) -> FleetState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weather = self
            .weather
            .initial_state(config::LaneRegion::ALL.len(), &mut rng);
        let ports: Vec<Port> = self.network.ports.iter().map(Port::new).collect();
        let vessels = self
            .config
            .vessels
            .iter()
            .enumerate()
            .map(|(id, spec)| {
                let jobs = if spec.jobs.is_empty() {
                    self.draw_jobs(spec.start, &mut rng)
                } else {
                    spec.jobs.clone()
                };
                let mut v = Vessel {
                    id,
                    hull_coefficient: spec.hull_coefficient,
                    v_ref: spec.v_ref,
                    v_max: spec.v_max,
                    current_v_max: spec.v_max,
                    fuel_capacity: spec.fuel_capacity,
                    fuel_level: spec.fuel_capacity,
                    failure_remaining: 0,
                    position: Position::Docked {
                        port: spec.start,
                        phase: PortPhase::Idle,
                    },
                    speed: 0.0,
                    jobs,
                    job_index: 0,
                    route: VecDeque::new(),
                    plan: VoyagePlan {
                        route_rank: 0,
                        window_offset: 0,
                        target_step: 0,
                        slack: 0,
                        envelope: 0.0,
                    },
                    arrived: false,
                    window_emissions: 0.0,
                    voyages_completed: 0,
                    waiting_hours: 0.0,
                    late_hours: 0.0,
                };
                self.begin_voyage(&mut v, 0);
                v
            })
            .collect::<Vec<_>>();
        let n = vessels.len();
        FleetState {
            t: 0,
            vessels,
            ports,
            weather,
            cumulative_emissions: 0.0,
            cumulative_cost: vec![0.0; n],
            voyages_completed: 0,
            waiting_hours: 0.0,
            active_epoch: None,
            rng,
        }
    }

    /// Points `v` at its current job using the candidate route of its plan's
    /// rank, and sets a fresh arrival window starting at `now`.
    fn begin_voyage(&self, v: &mut Vessel, now: u32) {
        let here = v.next_node();
        let dest = v.destination();
        let candidates = &self.routes[here][dest];
        v.route.clear();
        if let Some(path) = candidates.get(v.plan.route_rank.min(candidates.len().saturating_sub(1)))
        {
            v.route.extend(path.ports.iter().skip(1).copied());
        }
        v.arrived = here == dest && v.position.is_docked();
        if v.arrived {
            v.position = Position::Docked {
                port: here,
                phase: PortPhase::Anchored,
            };
        }
        // nominal ETA follows the shortest route whatever route is sailed
        let shortest = candidates.first().map_or(0.0, |p| p.nm);
        let eta = self.nominal_hours(shortest).ceil() as i64;
        v.plan.target_step = now as i64 + eta + v.plan.window_offset as i64;
    }

    fn adopt_directive(&self, v: &mut Vessel, d: &VesselDirective) -> Result<()> {
        let next = v.next_node();
        if d.route.first() != Some(&next) || !self.network.is_path(&d.route) {
            return Err(Error::Invariant(format!(
                "directive route {:?} for vessel {} does not start at port {next} or is not a path",
                d.route, v.id
            )));
        }
        if !v.arrived {
            if d.route.last() != Some(&v.destination()) {
                return Err(Error::Invariant(format!(
                    "directive route {:?} for vessel {} does not end at destination {}",
                    d.route,
                    v.id,
                    v.destination()
                )));
            }
            v.route.clear();
            let skip = usize::from(v.position.is_docked());
            v.route.extend(d.route.iter().skip(skip).copied());
        }
        v.plan = VoyagePlan {
            route_rank: d.route_rank,
            window_offset: d.window_offset,
            target_step: d.target_step,
            slack: d.slack,
            envelope: d.envelope,
        };
        v.window_emissions = 0.0;
        Ok(())
    }

    /// Local observation for `agent`. Pure.
    pub fn observe(
        &self,
        state: &FleetState,
        agent: usize,
        macro_action: &MacroAction,
    ) -> Result<Observation> {
        let v = state.vessels.get(agent).ok_or(Error::UnknownAgent(agent))?;
        let directive = macro_action
            .directives
            .get(agent)
            .cloned()
            .ok_or(Error::DimensionMismatch {
                what: "macro directives",
                expected: state.vessels.len(),
                got: macro_action.directives.len(),
            })?;
        let local = v.next_node();
        let port = &state.ports[local];
        let remaining_nm = self.remaining_nm(v);
        let close = (v.plan.target_step + v.plan.slack as i64) as f64;
        Ok(Observation {
            agent,
            t: state.t,
            speed: v.speed,
            v_ref: v.v_ref,
            v_max: v.v_max,
            current_v_max: v.current_v_max,
            hull_coefficient: v.hull_coefficient,
            fuel_level: v.fuel_level,
            fuel_capacity: v.fuel_capacity,
            healthy: v.healthy(),
            docked_phase: match &v.position {
                Position::Docked { phase, .. } => Some(*phase),
                Position::Transit { .. } => None,
            },
            lane_fraction: v.position.fraction(),
            remaining_nm,
            local_port: local,
            local_berth_queue: port.berth_queue.len(),
            local_berth_occupied: port.berth_occupancy(),
            local_berth_capacity: port.berth_capacity,
            local_crane_queue: port.crane_queue.len(),
            local_crane_occupied: port.crane_occupancy(),
            local_crane_capacity: port.crane_capacity,
            weather: self.local_weather(state, v).scenario,
            directive,
            hours_to_window_close: close - state.t as f64,
            nominal_hours_remaining: self.nominal_hours(remaining_nm),
            arrived: v.arrived,
            window_emissions: v.window_emissions,
            cumulative_cost: state.cumulative_cost[agent],
        })
    }

    /// Advances the fleet by one hour.
    ///
    /// Per-hour order: adopt a new macro directive if the epoch changed,
    /// draw failures, move vessels, resolve berth then crane queues port by
    /// port, progress service, charge costs, advance weather.
    pub fn step(
        &self,
        state: &mut FleetState,
        micro: &[MicroAction],
        macro_action: &MacroAction,
    ) -> Result<StepMetrics> {
        let n = state.vessels.len();
        if micro.len() != n {
            return Err(Error::DimensionMismatch {
                what: "micro actions",
                expected: n,
                got: micro.len(),
            });
        }
        if macro_action.directives.len() != n {
            return Err(Error::DimensionMismatch {
                what: "macro directives",
                expected: n,
                got: macro_action.directives.len(),
            });
        }
        let grid = &self.config.physics.speed_grid;
        if let Some(a) = micro.iter().find(|a| a.speed_index >= grid.len()) {
            return Err(Error::DimensionMismatch {
                what: "speed index",
                expected: grid.len(),
                got: a.speed_index,
            });
        }
        if state.active_epoch != Some(macro_action.epoch) {
            for (v, d) in state.vessels.iter_mut().zip(&macro_action.directives) {
                self.adopt_directive(v, d)?;
            }
            state.active_epoch = Some(macro_action.epoch);
        }

        let t = state.t;
        let physics = &self.config.physics;
        let failures = &self.config.failures;
        let prices = &self.config.prices;
        let n_ports = state.ports.len();

        for v in state.vessels.iter_mut() {
            if v.healthy() && failures.probability > 0.0 && state.rng.random::<f64>() < failures.probability
            {
                v.failure_remaining = failures.duration_hours;
            }
            v.current_v_max = if v.healthy() {
                v.v_max
            } else {
                v.v_max * failures.speed_factor
            };
        }

        let mut fuel = vec![0.0; n];
        let mut arrivals: Vec<Vec<usize>> = vec![Vec::new(); n_ports];
        for i in 0..n {
            let action = micro[i];
            let local = {
                let v = &state.vessels[i];
                self.local_weather(state, v)
            };
            let v = &mut state.vessels[i];
            let mut cmd = grid[action.speed_index] * v.current_v_max;
            if v.fuel_level <= 0.0 {
                cmd = 0.0;
            }
            // depart when idle with somewhere to go
            if let Position::Docked {
                port,
                phase: PortPhase::Idle,
            } = v.position
            {
                if cmd > 0.0 {
                    if let Some(&next) = v.route.front() {
                        let lane = self
                            .network
                            .lane_between(port, next)
                            .expect("route follows lanes");
                        v.position = Position::Transit {
                            lane,
                            to: next,
                            travelled_nm: 0.0,
                            length_nm: self.network.lanes[lane].nm,
                            detoured: false,
                        };
                    }
                }
            } else if action.detour {
                if let Position::Transit {
                    travelled_nm,
                    length_nm,
                    detoured,
                    ..
                } = &mut v.position
                {
                    if !*detoured {
                        *length_nm = *travelled_nm
                            + (*length_nm - *travelled_nm) * physics.detour_distance_factor;
                        *detoured = true;
                    }
                }
            }
            let weather = match &v.position {
                // departure or detour may have changed the applicable weather
                Position::Transit { lane, detoured, .. } => {
                    let s = state.weather.regions[self.network.lanes[*lane].region.index()];
                    self.weather.local(if *detoured { s.milder() } else { s })
                }
                Position::Docked { .. } => local,
            };
            let speed = match &mut v.position {
                Position::Docked { .. } => 0.0,
                Position::Transit { travelled_nm, .. } => {
                    *travelled_nm += cmd * weather.speed_multiplier;
                    cmd
                }
            };
            let docked = v.position.is_docked();
            let burn = fuel_rate(v, speed, &weather, docked, physics.idle_burn_fraction)?
                .min(v.fuel_level)
                .max(0.0);
            v.fuel_level -= burn;
            v.speed = speed;
            fuel[i] = burn;

            // arrival at the end of the lane
            if let Position::Transit {
                to,
                travelled_nm,
                length_nm,
                ..
            } = v.position
            {
                if travelled_nm >= length_nm {
                    let front = v.route.pop_front();
                    debug_assert_eq!(front, Some(to));
                    if v.route.is_empty() {
                        v.arrived = true;
                        v.position = Position::Docked {
                            port: to,
                            phase: PortPhase::Anchored,
                        };
                    } else {
                        v.position = Position::Docked {
                            port: to,
                            phase: PortPhase::Idle,
                        };
                    }
                }
            }
            if let Position::Docked {
                port,
                phase: phase @ PortPhase::Anchored,
            } = &mut v.position
            {
                if action.berth_request {
                    arrivals[*port].push(i);
                    *phase = PortPhase::Queued;
                }
            }
        }

        let mut waiting = vec![0.0; n];
        let mut berth_overflow = vec![0u32; n_ports];
        let mut crane_overflow = vec![0u32; n_ports];
        let mut berth_occupancy = vec![0u32; n_ports];
        let mut crane_occupancy = vec![0u32; n_ports];
        let mut completed: Vec<usize> = Vec::new();
        for p in 0..n_ports {
            let port = &mut state.ports[p];
            let berth = port.queue_step(&arrivals[p]);
            for &i in &berth.served {
                state.vessels[i].position = Position::Docked {
                    port: p,
                    phase: PortPhase::Berthed {
                        service_left: port.service_hours,
                    },
                };
            }
            let crane_requests: Vec<usize> = port
                .berthed
                .iter()
                .copied()
                .filter(|i| {
                    micro[*i].crane_request
                        && !port.craned.contains(i)
                        && !port.crane_queue.contains(i)
                })
                .collect();
            let crane = port.crane_step(&crane_requests);
            for &i in berth.waiting.iter().chain(&crane.waiting) {
                waiting[i] += 1.0;
            }
            berth_overflow[p] = berth.overflow;
            crane_overflow[p] = crane.overflow;
            berth_occupancy[p] = port.berth_occupancy();
            crane_occupancy[p] = port.crane_occupancy();
            if !port.within_capacity() {
                return Err(Error::Invariant(format!(
                    "port {p} over capacity after resolution: berths {}/{} cranes {}/{}",
                    port.berth_occupancy(),
                    port.berth_capacity,
                    port.crane_occupancy(),
                    port.crane_capacity
                )));
            }
            let craned = port.craned.clone();
            for i in craned {
                if let Position::Docked {
                    phase: PortPhase::Berthed { service_left },
                    ..
                } = &mut state.vessels[i].position
                {
                    *service_left = service_left.saturating_sub(1);
                    if *service_left == 0 {
                        port.release(i);
                        completed.push(i);
                    }
                }
            }
        }

        for &i in &completed {
            let v = &mut state.vessels[i];
            v.voyages_completed += 1;
            v.fuel_level = v.fuel_capacity;
            v.job_index = (v.job_index + 1) % v.jobs.len();
            let port = v.next_node();
            v.position = Position::Docked {
                port,
                phase: PortPhase::Idle,
            };
            self.begin_voyage(v, t + 1);
        }

        let mut emissions = vec![0.0; n];
        let mut costs = vec![0.0; n];
        let mut late = vec![0.0; n];
        for (i, v) in state.vessels.iter_mut().enumerate() {
            if !v.arrived && (t as i64 + 1) > v.plan.target_step + v.plan.slack as i64 {
                late[i] = 1.0;
            }
            emissions[i] = physics.carbon_factor * fuel[i];
            v.window_emissions += emissions[i];
            v.waiting_hours += waiting[i];
            v.late_hours += late[i];
            costs[i] = prices.fuel_price * fuel[i]
                + prices.time_price
                + prices.wait_price * (waiting[i] + late[i]);
            state.cumulative_cost[i] += costs[i];
            if v.failure_remaining > 0 {
                v.failure_remaining -= 1;
            }
        }
        let e_t: f64 = emissions.iter().sum();
        if !(e_t >= 0.0 && e_t <= self.emission_bound + BOUND_EPS) {
            return Err(Error::Invariant(format!(
                "step emissions {e_t} outside [0, {}]",
                self.emission_bound
            )));
        }
        state.cumulative_emissions += e_t;
        let step_waiting: f64 = waiting.iter().sum();
        state.waiting_hours += step_waiting;
        state.voyages_completed += completed.len() as u64;
        state.weather = self.weather.sample_weather(&state.weather, &mut state.rng);
        state.t += 1;

        Ok(StepMetrics {
            emissions: e_t,
            vessel_emissions: emissions,
            vessel_fuel: fuel,
            berth_overflow,
            crane_overflow,
            berth_occupancy,
            crane_occupancy,
            rewards: costs.iter().map(|c| -c).collect(),
            costs,
            voyages_completed: completed.len() as u32,
            waiting_hours: step_waiting,
            late_hours: late.iter().sum(),
        })
    }
}
