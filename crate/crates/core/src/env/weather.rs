use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{ScenarioProfile, WeatherConfig};
use crate::error::{Error, Result};

const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Calm,
    Swell,
    Storm,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Calm, Scenario::Swell, Scenario::Storm];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    /// One severity class milder (detoured legs route around the worst cells).
    pub fn milder(self) -> Self {
        match self {
            Scenario::Storm => Scenario::Swell,
            _ => Scenario::Calm,
        }
    }
}

/// Weather as seen by a single vessel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalWeather {
    pub scenario: Scenario,
    pub speed_multiplier: f64,
    pub fuel_multiplier: f64,
}

impl LocalWeather {
    pub fn calm() -> Self {
        Self {
            scenario: Scenario::Calm,
            speed_multiplier: 1.0,
            fuel_multiplier: 1.0,
        }
    }
}

/// One scenario per weather region (coastal, open sea).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeatherState {
    pub regions: Vec<Scenario>,
}

/// Finite-state Markov chain over [`Scenario`] with per-scenario multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherModel {
    profiles: [ScenarioProfile; 3],
    transition: [[f64; 3]; 3],
    initial: [f64; 3],
}

pub(crate) fn check_distribution(row: &[f64], n: usize) -> Result<()> {
    if row.len() != n {
        return Err(Error::MalformedTransition(format!(
            "row has {} entries, expected {n}",
            row.len()
        )));
    }
    if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::MalformedTransition(format!(
            "row {row:?} has negative or non-finite entries"
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        return Err(Error::MalformedTransition(format!("row sums to {sum}")));
    }
    Ok(())
}

pub(crate) fn check_stochastic_matrix(m: &[Vec<f64>], n: usize) -> Result<()> {
    if m.len() != n {
        return Err(Error::MalformedTransition(format!(
            "{} rows, expected {n}",
            m.len()
        )));
    }
    m.iter().try_for_each(|row| check_distribution(row, n))
}

fn draw(row: &[f64; 3], rng: &mut impl Rng) -> Scenario {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return Scenario::from_index(i);
        }
    }
    // u landed in the rounding slack above the last cumulative sum
    let last = row.iter().rposition(|&p| p > 0.0).unwrap_or(2);
    Scenario::from_index(last)
}

impl WeatherModel {
    pub fn new(cfg: &WeatherConfig) -> Result<Self> {
        Self::from_parts(cfg.profiles.clone(), &cfg.transition, &cfg.initial)
    }

    pub fn from_parts(
        profiles: [ScenarioProfile; 3],
        transition: &[Vec<f64>],
        initial: &[f64],
    ) -> Result<Self> {
        check_stochastic_matrix(transition, 3)?;
        check_distribution(initial, 3)?;
        let mut t = [[0.0; 3]; 3];
        for (dst, src) in t.iter_mut().zip(transition) {
            dst.copy_from_slice(src);
        }
        Ok(Self {
            profiles,
            transition: t,
            initial: [initial[0], initial[1], initial[2]],
        })
    }

    pub fn initial_state(&self, regions: usize, rng: &mut impl Rng) -> WeatherState {
        WeatherState {
            regions: (0..regions).map(|_| draw(&self.initial, rng)).collect(),
        }
    }

    /// Advances every region one step of the chain.
    pub fn sample_weather(&self, current: &WeatherState, rng: &mut impl Rng) -> WeatherState {
        WeatherState {
            regions: current
                .regions
                .iter()
                .map(|s| draw(&self.transition[s.index()], rng))
                .collect(),
        }
    }

    pub fn local(&self, scenario: Scenario) -> LocalWeather {
        let p = &self.profiles[scenario.index()];
        LocalWeather {
            scenario,
            speed_multiplier: p.speed_multiplier,
            fuel_multiplier: p.fuel_multiplier,
        }
    }

    pub fn worst_fuel_multiplier(&self) -> f64 {
        self.profiles
            .iter()
            .map(|p| p.fuel_multiplier)
            .fold(1.0, f64::max)
    }
}
