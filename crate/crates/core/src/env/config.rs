//! JSON environment schema.
//!
//! Every struct rejects unknown keys. Units: distances in nautical miles,
//! speeds in knots, fuel in tonnes, emissions in tonnes CO2e, prices in
//! reward units per tonne or per hour.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub ports: Vec<PortSpec>,
    pub lanes: Vec<LaneSpec>,
    pub vessels: Vec<VesselSpec>,
    #[serde(default)]
    pub weather: WeatherConfig,
    #[serde(default)]
    pub failures: FailureConfig,
    #[serde(default)]
    pub prices: PriceConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    /// Upper bound on per-step fleet emissions. Derived from the fleet when
    /// absent; must not be below the physical maximum when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortSpec {
    /// Must equal the port's position in the `ports` array.
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub berth_capacity: u32,
    pub crane_capacity: u32,
    #[serde(default = "default_service_hours")]
    pub service_hours: u32,
}

fn default_service_hours() -> u32 {
    4
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneRegion {
    Coastal,
    OpenSea,
}

impl LaneRegion {
    pub const ALL: [LaneRegion; 2] = [LaneRegion::Coastal, LaneRegion::OpenSea];

    pub fn index(self) -> usize {
        match self {
            LaneRegion::Coastal => 0,
            LaneRegion::OpenSea => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneSpec {
    pub from: usize,
    pub to: usize,
    pub nm: f64,
    /// Weather region; lanes shorter than `weather.coastal_threshold_nm` are
    /// coastal when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<LaneRegion>,
    /// Adds the reverse lane with the same length.
    #[serde(default = "yes")]
    pub bidirectional: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VesselSpec {
    /// Fuel burn (t/h) at the reference speed in calm water.
    pub hull_coefficient: f64,
    pub v_ref: f64,
    pub v_max: f64,
    pub start: usize,
    #[serde(default = "default_fuel_capacity")]
    pub fuel_capacity: f64,
    /// Cyclic list of destination ports. Drawn from the reset seed when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jobs: Vec<usize>,
}

fn default_fuel_capacity() -> f64 {
    800.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioProfile {
    pub speed_multiplier: f64,
    pub fuel_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherConfig {
    /// Profiles for calm, swell and storm, in that order.
    pub profiles: [ScenarioProfile; 3],
    /// Row-stochastic 3x3 matrix, rows indexed by the current scenario.
    pub transition: Vec<Vec<f64>>,
    /// Initial scenario distribution.
    pub initial: Vec<f64>,
    pub coastal_threshold_nm: f64,
}

impl Default for WeatherConfig {
    fn default() -> Self {
        Self {
            profiles: [
                ScenarioProfile {
                    speed_multiplier: 1.0,
                    fuel_multiplier: 1.0,
                },
                ScenarioProfile {
                    speed_multiplier: 0.85,
                    fuel_multiplier: 1.2,
                },
                ScenarioProfile {
                    speed_multiplier: 0.6,
                    fuel_multiplier: 1.5,
                },
            ],
            transition: vec![
                vec![0.9, 0.08, 0.02],
                vec![0.3, 0.6, 0.1],
                vec![0.2, 0.4, 0.4],
            ],
            initial: vec![0.7, 0.2, 0.1],
            coastal_threshold_nm: 300.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureConfig {
    /// Bernoulli probability per healthy vessel-hour.
    pub probability: f64,
    /// Multiplier applied to v_max while failed.
    pub speed_factor: f64,
    pub duration_hours: u32,
}

impl Default for FailureConfig {
    fn default() -> Self {
        Self {
            probability: 0.01,
            speed_factor: 0.5,
            duration_hours: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceConfig {
    /// Per tonne of fuel.
    pub fuel_price: f64,
    /// Per vessel-hour.
    pub time_price: f64,
    /// Per hour spent queueing or past the arrival window.
    pub wait_price: f64,
}

impl Default for PriceConfig {
    fn default() -> Self {
        Self {
            fuel_price: 1.0,
            time_price: 0.5,
            wait_price: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    /// Tonnes CO2e per tonne of fuel.
    pub carbon_factor: f64,
    /// Idle burn as a fraction of the v_ref fuel rate.
    pub idle_burn_fraction: f64,
    /// Speed used for nominal lane transit hours and ETAs.
    pub reference_speed_knots: f64,
    /// Distance multiplier applied to the rest of a leg when detouring.
    pub detour_distance_factor: f64,
    /// Fractions of the current v_max; first entry must be 0.
    pub speed_grid: Vec<f64>,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            carbon_factor: 3.114,
            idle_burn_fraction: 0.02,
            reference_speed_knots: 14.0,
            detour_distance_factor: 1.15,
            speed_grid: vec![0.0, 0.4, 0.6, 0.8, 1.0],
        }
    }
}

impl EnvConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: EnvConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Largest possible per-step fleet emissions: every vessel at nominal
    /// v_max in the worst fuel multiplier, or idling, whichever is larger.
    pub fn physical_emission_bound(&self) -> f64 {
        let worst = self
            .weather
            .profiles
            .iter()
            .map(|p| p.fuel_multiplier)
            .fold(1.0_f64, f64::max);
        let grid_max = self.physics.speed_grid.iter().copied().fold(0.0, f64::max);
        self.vessels
            .iter()
            .map(|v| {
                let ratio = grid_max * v.v_max / v.v_ref;
                let moving = v.hull_coefficient * ratio.powi(3) * worst;
                let idle = v.hull_coefficient * self.physics.idle_burn_fraction;
                moving.max(idle)
            })
            .sum::<f64>()
            * self.physics.carbon_factor
    }

    pub fn emission_bound(&self) -> f64 {
        self.emission_bound
            .unwrap_or_else(|| self.physical_emission_bound())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let n_ports = self.ports.len();
        if n_ports < 2 {
            return bad(format!("need at least 2 ports, got {n_ports}"));
        }
        for (i, p) in self.ports.iter().enumerate() {
            if p.id != i {
                return bad(format!("port at position {i} has id {}", p.id));
            }
            if p.berth_capacity == 0 || p.crane_capacity == 0 {
                return bad(format!("port {i} has zero berth or crane capacity"));
            }
            if p.service_hours == 0 {
                return bad(format!("port {i} has zero service hours"));
            }
        }
        if self.lanes.is_empty() {
            return bad("no lanes".into());
        }
        for l in &self.lanes {
            if l.from >= n_ports || l.to >= n_ports {
                return bad(format!("lane {}->{} references unknown port", l.from, l.to));
            }
            if l.from == l.to {
                return bad(format!("lane {}->{} is a self loop", l.from, l.to));
            }
            if !(l.nm.is_finite() && l.nm > 0.0) {
                return bad(format!("lane {}->{} has non-positive distance", l.from, l.to));
            }
        }
        if !undirected_connected(n_ports, &self.lanes) {
            return bad("port network is disconnected".into());
        }
        if self.vessels.is_empty() {
            return bad("no vessels".into());
        }
        for (i, v) in self.vessels.iter().enumerate() {
            if !(v.hull_coefficient > 0.0 && v.hull_coefficient.is_finite()) {
                return bad(format!("vessel {i} hull coefficient must be > 0"));
            }
            if !(v.v_ref > 0.0 && v.v_ref <= v.v_max && v.v_max.is_finite()) {
                return bad(format!("vessel {i} needs 0 < v_ref <= v_max"));
            }
            if v.start >= n_ports {
                return bad(format!("vessel {i} starts at unknown port {}", v.start));
            }
            if !(v.fuel_capacity > 0.0) {
                return bad(format!("vessel {i} fuel capacity must be > 0"));
            }
            if let Some(j) = v.jobs.iter().find(|&&j| j >= n_ports) {
                return bad(format!("vessel {i} job references unknown port {j}"));
            }
        }
        let w = &self.weather;
        for (i, p) in w.profiles.iter().enumerate() {
            if !(p.speed_multiplier > 0.0 && p.speed_multiplier <= 1.0) {
                return bad(format!("weather profile {i} speed multiplier outside (0,1]"));
            }
            if !(p.fuel_multiplier >= 1.0 && p.fuel_multiplier.is_finite()) {
                return bad(format!("weather profile {i} fuel multiplier below 1"));
            }
        }
        crate::env::weather::check_stochastic_matrix(&w.transition, 3)?;
        crate::env::weather::check_distribution(&w.initial, 3)?;
        let f = &self.failures;
        if !(0.0..=1.0).contains(&f.probability) {
            return bad("failure probability outside [0,1]".into());
        }
        if !(f.speed_factor > 0.0 && f.speed_factor <= 1.0) {
            return bad("failure speed factor outside (0,1]".into());
        }
        let pr = &self.prices;
        if [pr.fuel_price, pr.time_price, pr.wait_price]
            .iter()
            .any(|x| !(x.is_finite() && *x >= 0.0))
        {
            return bad("prices must be finite and non-negative".into());
        }
        let ph = &self.physics;
        if !(ph.carbon_factor > 0.0) || !(ph.reference_speed_knots > 0.0) {
            return bad("carbon factor and reference speed must be > 0".into());
        }
        if !(0.0..1.0).contains(&ph.idle_burn_fraction) {
            return bad("idle burn fraction outside [0,1)".into());
        }
        if !(ph.detour_distance_factor >= 1.0) {
            return bad("detour distance factor below 1".into());
        }
        let g = &ph.speed_grid;
        if g.len() < 2 || g[0] != 0.0 || g.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return bad("speed grid must start at 0 and stay within [0,1]".into());
        }
        if let Some(bound) = self.emission_bound {
            let phys = self.physical_emission_bound();
            if !(bound >= phys) {
                return bad(format!(
                    "emission bound {bound} below physical maximum {phys:.3}"
                ));
            }
        }
        Ok(())
    }
}

fn undirected_connected(n: usize, lanes: &[LaneSpec]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for l in lanes {
        adj[l.from].push(l.to);
        adj[l.to].push(l.from);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}
