use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::weather::LocalWeather;
use crate::error::{Error, Result};

/// Slack on speed-bound checks to absorb grid multiplication rounding.
const SPEED_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortPhase {
    /// Free to depart (origin, waypoint, or after service).
    Idle,
    /// At the destination, not yet requesting a berth.
    Anchored,
    /// In the berth queue.
    Queued,
    /// Holding a berth; `service_left` hours of crane work remain.
    Berthed { service_left: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Position {
    Docked {
        port: usize,
        phase: PortPhase,
    },
    Transit {
        lane: usize,
        to: usize,
        travelled_nm: f64,
        length_nm: f64,
        detoured: bool,
    },
}

impl Position {
    pub fn port(&self) -> Option<usize> {
        match self {
            Position::Docked { port, .. } => Some(*port),
            Position::Transit { .. } => None,
        }
    }

    /// Fraction of the current leg completed; 0 when docked.
    pub fn fraction(&self) -> f64 {
        match self {
            Position::Docked { .. } => 0.0,
            Position::Transit {
                travelled_nm,
                length_nm,
                ..
            } => (travelled_nm / length_nm).clamp(0.0, 1.0),
        }
    }

    pub fn is_docked(&self) -> bool {
        matches!(self, Position::Docked { .. })
    }
}

/// Route, arrival window and budget envelope currently followed by a vessel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoyagePlan {
    pub route_rank: usize,
    pub window_offset: i32,
    pub target_step: i64,
    pub slack: u32,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vessel {
    pub id: usize,
    /// Fuel burn (t/h) at `v_ref` in calm water.
    pub hull_coefficient: f64,
    pub v_ref: f64,
    pub v_max: f64,
    /// `v_max`, reduced while a failure is active.
    pub current_v_max: f64,
    pub fuel_capacity: f64,
    pub fuel_level: f64,
    pub failure_remaining: u32,
    pub position: Position,
    /// Speed actually made good last hour, before the weather multiplier.
    pub speed: f64,
    pub jobs: Vec<usize>,
    pub job_index: usize,
    /// Ports still to reach, ending at the destination. While in transit the
    /// head is the lane's end port.
    pub route: VecDeque<usize>,
    pub plan: VoyagePlan,
    /// True once the current destination has been reached.
    pub arrived: bool,
    pub window_emissions: f64,
    pub voyages_completed: u32,
    pub waiting_hours: f64,
    pub late_hours: f64,
}

impl Vessel {
    pub fn healthy(&self) -> bool {
        self.failure_remaining == 0
    }

    pub fn destination(&self) -> usize {
        self.jobs[self.job_index]
    }

    /// Current port when docked, otherwise the end port of the current lane.
    pub fn next_node(&self) -> usize {
        match &self.position {
            Position::Docked { port, .. } => *port,
            Position::Transit { to, .. } => *to,
        }
    }
}

/// Fuel burn in t/h at `speed` knots: `k (v / v_ref)^3` scaled by the
/// weather fuel multiplier. A stationary docked vessel burns
/// `idle_fraction * k` instead.
pub fn fuel_rate(
    vessel: &Vessel,
    speed: f64,
    weather: &LocalWeather,
    docked: bool,
    idle_fraction: f64,
) -> Result<f64> {
    if !(speed >= 0.0) || speed > vessel.current_v_max + SPEED_EPS {
        return Err(Error::SpeedAboveMax {
            speed,
            max: vessel.current_v_max,
        });
    }
    let ratio = speed / vessel.v_ref;
    let moving = vessel.hull_coefficient * ratio * ratio * ratio * weather.fuel_multiplier;
    if speed == 0.0 && docked {
        Ok(moving + idle_fraction * vessel.hull_coefficient)
    } else {
        Ok(moving)
    }
}

#[cfg(test)]
pub(crate) fn test_vessel(k: f64, v_ref: f64, v_max: f64) -> Vessel {
    Vessel {
        id: 0,
        hull_coefficient: k,
        v_ref,
        v_max,
        current_v_max: v_max,
        fuel_capacity: 100.0,
        fuel_level: 100.0,
        failure_remaining: 0,
        position: Position::Docked {
            port: 0,
            phase: PortPhase::Idle,
        },
        speed: 0.0,
        jobs: vec![1],
        job_index: 0,
        route: VecDeque::from(vec![1]),
        plan: VoyagePlan {
            route_rank: 0,
            window_offset: 0,
            target_step: 10,
            slack: 2,
            envelope: 0.0,
        },
        arrived: false,
        window_emissions: 0.0,
        voyages_completed: 0,
        waiting_hours: 0.0,
        late_hours: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::weather::Scenario;
    use proptest::prelude::*;

    fn storm(mult: f64) -> LocalWeather {
        LocalWeather {
            scenario: Scenario::Storm,
            speed_multiplier: 0.6,
            fuel_multiplier: mult,
        }
    }

    #[test]
    fn identity_point_of_curve() {
        let v = test_vessel(1.0, 12.0, 20.0);
        let r = fuel_rate(&v, 12.0, &LocalWeather::calm(), false, 0.02).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn cubic_law_at_double_speed() {
        let v = test_vessel(1.0, 10.0, 20.0);
        let r = fuel_rate(&v, 20.0, &LocalWeather::calm(), false, 0.02).unwrap();
        assert!((r - 8.0).abs() < 1e-12);
    }

    #[test]
    fn storm_multiplier() {
        let v = test_vessel(2.0, 12.0, 20.0);
        let r = fuel_rate(&v, 12.0, &storm(1.5), false, 0.02).unwrap();
        assert!((r - 3.0).abs() < 1e-12);
    }

    #[test]
    fn idle_burn_only_when_docked() {
        let v = test_vessel(2.0, 12.0, 20.0);
        let docked = fuel_rate(&v, 0.0, &LocalWeather::calm(), true, 0.02).unwrap();
        let drifting = fuel_rate(&v, 0.0, &LocalWeather::calm(), false, 0.02).unwrap();
        assert!((docked - 0.04).abs() < 1e-15);
        assert_eq!(drifting, 0.0);
    }

    #[test]
    fn above_failure_reduced_max_is_rejected() {
        let mut v = test_vessel(1.0, 12.0, 20.0);
        v.current_v_max = 10.0;
        assert!(matches!(
            fuel_rate(&v, 12.0, &LocalWeather::calm(), false, 0.02),
            Err(Error::SpeedAboveMax { .. })
        ));
    }

    proptest! {
        #[test]
        fn cubic_scaling(a in 0.01f64..20.0, b in 0.01f64..20.0, k in 0.1f64..5.0, m in 1.0f64..2.0) {
            let v = test_vessel(k, 10.0, 20.0);
            let w = storm(m);
            let ra = fuel_rate(&v, a, &w, false, 0.02).unwrap();
            let rb = fuel_rate(&v, b, &w, false, 0.02).unwrap();
            let expected = (a / b).powi(3);
            prop_assert!((ra / rb - expected).abs() <= 1e-12 * expected.max(1.0));
        }
    }
}
