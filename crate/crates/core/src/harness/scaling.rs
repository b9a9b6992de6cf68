//! Wall-clock scaling of training episodes with fleet size.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{EnvSource, RunConfig};
use super::regret::loglog_fit;
use super::runner::SeedRun;
use crate::env::{EnvConfig, TwinEnv};
use crate::error::{Error, Result};

/// Acceptance ceiling on the fitted exponent.
pub const MAX_EXPONENT: f64 = 1.3;

/// Copy of `cfg` with exactly `n` vessels, cycling through its vessel specs.
/// A configured emission bound is dropped so it is re-derived for the new
/// fleet.
pub fn resize_fleet(cfg: &EnvConfig, n: usize) -> Result<EnvConfig> {
    if n == 0 {
        return Err(Error::InvalidConfig("fleet size must be >= 1".into()));
    }
    let mut out = cfg.clone();
    out.vessels = (0..n)
        .map(|i| cfg.vessels[i % cfg.vessels.len()].clone())
        .collect();
    out.emission_bound = None;
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub agents: usize,
    pub episodes: usize,
    pub seconds_per_episode: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub points: Vec<ScalingPoint>,
    /// Least-squares slope of log time against log fleet size.
    pub exponent: Option<f64>,
    pub pass: bool,
}

/// Times training episodes for each fleet size. Each size runs one warm-up
/// episode, then at least `min_episodes` and until `min_seconds` elapse.
pub fn scale_probe(
    cfg: &RunConfig,
    agents: &[usize],
    min_episodes: usize,
    min_seconds: f64,
) -> Result<ScalingReport> {
    if agents.len() < 2 {
        return Err(Error::InvalidConfig("scaling probe needs at least two fleet sizes".into()));
    }
    let base = cfg.env_config()?;
    let mut points = Vec::with_capacity(agents.len());
    for &n in agents {
        let env_cfg = resize_fleet(&base, n)?;
        let env = TwinEnv::with_route_candidates(env_cfg.clone(), cfg.route_candidates)?;
        let mut run_cfg = cfg.clone();
        run_cfg.env = EnvSource::Inline(Box::new(env_cfg));
        // a loose budget keeps prices active without needing calibration
        let budget = cfg
            .constraint
            .budget
            .map(|b| b * n as f64 / base.vessels.len() as f64)
            .unwrap_or(0.25 * env.emission_bound() * cfg.horizon as f64);
        let mut run = SeedRun::new(&env, &run_cfg, cfg.mode, cfg.seeds[0], budget)?;
        run.run_episode()?;
        let start = Instant::now();
        let mut episodes = 0;
        while episodes < min_episodes.max(1) || start.elapsed().as_secs_f64() < min_seconds {
            run.run_episode()?;
            episodes += 1;
        }
        points.push(ScalingPoint {
            agents: n,
            episodes,
            seconds_per_episode: start.elapsed().as_secs_f64() / episodes as f64,
        });
    }
    let exponent = loglog_fit(
        &points
            .iter()
            .map(|p| (p.agents as f64, p.seconds_per_episode))
            .collect::<Vec<_>>(),
    );
    Ok(ScalingReport {
        pass: exponent.is_some_and(|e| e <= MAX_EXPONENT),
        points,
        exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::generator::{generate, GeneratorParams};

    #[test]
    fn resize_cycles_specs() {
        let cfg = generate(&GeneratorParams::new(4, 3, 1)).unwrap();
        let big = resize_fleet(&cfg, 7).unwrap();
        assert_eq!(big.vessels.len(), 7);
        assert_eq!(big.vessels[3], cfg.vessels[0]);
        assert_eq!(big.vessels[6], cfg.vessels[0]);
        assert!(resize_fleet(&cfg, 0).is_err());
    }
}
