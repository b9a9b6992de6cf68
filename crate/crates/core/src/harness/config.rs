//! Run configuration (JSON).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constraint::{DualPersistence, DEFAULT_ETA_BASE, DEFAULT_LAMBDA_MAX};
use crate::env::generator::{generate, GeneratorParams};
use crate::env::{EnvConfig, ROUTE_CANDIDATES};
use crate::error::{Error, Result};
use crate::fairness::FairnessParams;
use crate::hierarchy::HierarchyParams;
use crate::learner::{BaselineMode, LearnerParams};

/// Where the environment comes from: a JSON file (relative to the run
/// config), generator parameters, or an inline definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnvSource {
    File(PathBuf),
    Generate { generate: GeneratorParams },
    Inline(Box<EnvConfig>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintParams {
    /// Episode emissions budget `B` (t CO2e). Calibrated when absent.
    pub budget: Option<f64>,
    /// Rolling window `T_w`; the whole episode when absent.
    pub window: Option<u32>,
    pub eta_base: f64,
    pub lambda_max: f64,
    pub persistence: DualPersistence,
    /// Episodes of the unconstrained probe used to calibrate `B`.
    pub calibration_episodes: usize,
    /// `B` as a fraction of the probe's mean episode emissions.
    pub calibration_fraction: f64,
}

impl Default for ConstraintParams {
    fn default() -> Self {
        Self {
            budget: None,
            window: None,
            eta_base: DEFAULT_ETA_BASE,
            lambda_max: DEFAULT_LAMBDA_MAX,
            persistence: DualPersistence::Persist,
            calibration_episodes: 50,
            calibration_fraction: 0.85,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvSource,
    #[serde(default = "default_episodes")]
    pub episodes: usize,
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub mode: BaselineMode,
    #[serde(default = "default_candidates")]
    pub route_candidates: usize,
    #[serde(default)]
    pub constraint: ConstraintParams,
    #[serde(default)]
    pub fairness: FairnessParams,
    #[serde(default)]
    pub hierarchy: HierarchyParams,
    #[serde(default)]
    pub learner: LearnerParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_episodes() -> usize {
    400
}
fn default_horizon() -> u32 {
    50
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_candidates() -> usize {
    ROUTE_CANDIDATES
}

impl RunConfig {
    pub fn new(env: EnvConfig) -> Self {
        Self {
            env: EnvSource::Inline(Box::new(env)),
            episodes: default_episodes(),
            horizon: default_horizon(),
            seeds: default_seeds(),
            mode: BaselineMode::Full,
            route_candidates: default_candidates(),
            constraint: ConstraintParams::default(),
            fairness: FairnessParams::default(),
            hierarchy: HierarchyParams::default(),
            learner: LearnerParams::default(),
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a run config; a file-based environment is read relative to the
    /// config's directory and inlined.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        if let EnvSource::File(rel) = &cfg.env {
            let full = path.parent().unwrap_or(Path::new(".")).join(rel);
            cfg.env = EnvSource::Inline(Box::new(EnvConfig::load(full)?));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn env_config(&self) -> Result<EnvConfig> {
        match &self.env {
            EnvSource::File(p) => EnvConfig::load(p),
            EnvSource::Generate { generate: g } => generate(g),
            EnvSource::Inline(c) => {
                c.validate()?;
                Ok((**c).clone())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.episodes == 0 {
            return bad("episodes must be >= 1".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be >= 1".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.route_candidates == 0 {
            return bad("route_candidates must be >= 1".into());
        }
        let c = &self.constraint;
        if let Some(b) = c.budget {
            if !(b.is_finite() && b >= 0.0) {
                return bad(format!("budget {b} must be >= 0"));
            }
        }
        if let Some(w) = c.window {
            if w == 0 || w > self.horizon {
                return bad(format!("window {w} must lie in [1, {}]", self.horizon));
            }
        }
        if !(c.eta_base > 0.0 && c.lambda_max > 0.0) {
            return bad("eta_base and lambda_max must be > 0".into());
        }
        if c.budget.is_none() && (c.calibration_episodes == 0 || c.calibration_fraction <= 0.0) {
            return bad("budget calibration needs episodes >= 1 and a positive fraction".into());
        }
        self.fairness.validate()?;
        self.hierarchy.validate()?;
        self.learner.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::from_json(r#"{"env": {"generate": {"ports": 4, "vessels": 3, "seed": 1}}}"#)
            .unwrap();
        assert_eq!(cfg.episodes, 400);
        assert_eq!(cfg.horizon, 50);
        assert_eq!(cfg.mode, BaselineMode::Full);
        assert_eq!(cfg.hierarchy.tau_h, 10);
        assert_eq!(cfg.fairness.zeta, 0.25);
        assert_eq!(cfg.learner.learning_rate, 5e-4);
        assert_eq!(cfg.env_config().unwrap().vessels.len(), 3);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(RunConfig::from_json(
            r#"{"env": {"generate": {"ports": 4, "vessels": 3, "seed": 1}}, "bogus": 1}"#
        )
        .is_err());
        assert!(RunConfig::from_json(
            r#"{"env": {"generate": {"ports": 4, "vessels": 3, "seed": 1}}, "episodes": 0}"#
        )
        .is_err());
        assert!(RunConfig::from_json(
            r#"{"env": {"generate": {"ports": 4, "vessels": 3, "seed": 1}}, "mode": "nope"}"#
        )
        .is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig::from_json(
            r#"{"env": {"generate": {"ports": 4, "vessels": 3, "seed": 1}}, "mode": "no-fairness", "seeds": [1, 2]}"#,
        )
        .unwrap();
        let back = RunConfig::from_json(&cfg.to_json_pretty().unwrap()).unwrap();
        assert_eq!(cfg, back);
    }
}
