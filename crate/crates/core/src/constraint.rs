//! Online primal-dual pricing of the emissions budget and port capacities.
//!
//! Each dual follows a projected subgradient step
//! `y <- clamp(y + eta_t * g, 0, y_max)` with `eta_t = eta_base / sqrt(t + 1)`,
//! where `g` is the step's constraint signal minus its per-step allowance.
//! Priced rewards subtract the dual-weighted signals from the raw reward.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default dual step-size scale.
pub const DEFAULT_ETA_BASE: f64 = 0.05;
/// Default ceiling on the emissions dual.
pub const DEFAULT_LAMBDA_MAX: f64 = 1e3;

/// `eta_base / sqrt(t + 1)`.
pub fn step_size(t: u64, eta_base: f64) -> f64 {
    eta_base / ((t + 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DualPersistence {
    /// Duals carry over to the next episode.
    #[default]
    Persist,
    /// Duals restart from zero every episode.
    Reset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintLedger {
    /// Emissions dual (reward units per t CO2e).
    pub lambda: f64,
    /// Berth-overflow duals per port.
    pub mu: Vec<f64>,
    /// Crane-overflow duals per port.
    pub nu: Vec<f64>,
    /// Episode emissions budget `B`.
    pub budget: f64,
    pub horizon: u32,
    /// Rolling window length `T_w`; the whole episode when `None`.
    pub window: Option<u32>,
    pub eta_base: f64,
    pub lambda_max: f64,
    /// When false the duals stay frozen at their current values (zero in the
    /// unconstrained ablations) but violations are still recorded.
    pub pricing_enabled: bool,
    pub cumulative_violation: f64,
    history: Vec<f64>,
    archive: Vec<Vec<f64>>,
    episode_emissions: f64,
    episode_berth_overflow: Vec<f64>,
    episode_crane_overflow: Vec<f64>,
}

impl ConstraintLedger {
    pub fn new(budget: f64, horizon: u32, ports: usize, eta_base: f64) -> Result<Self> {
        if !(budget.is_finite() && budget >= 0.0) {
            return Err(Error::InvalidConfig(format!("budget {budget} must be >= 0")));
        }
        if horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be >= 1".into()));
        }
        if !(eta_base > 0.0 && eta_base.is_finite()) {
            return Err(Error::InvalidConfig(format!("eta_base {eta_base} must be > 0")));
        }
        Ok(Self {
            lambda: 0.0,
            mu: vec![0.0; ports],
            nu: vec![0.0; ports],
            budget,
            horizon,
            window: None,
            eta_base,
            lambda_max: DEFAULT_LAMBDA_MAX,
            pricing_enabled: true,
            cumulative_violation: 0.0,
            history: Vec::new(),
            archive: Vec::new(),
            episode_emissions: 0.0,
            episode_berth_overflow: vec![0.0; ports],
            episode_crane_overflow: vec![0.0; ports],
        })
    }

    pub fn with_window(mut self, window: Option<u32>) -> Result<Self> {
        if let Some(w) = window {
            if w == 0 || w > self.horizon {
                return Err(Error::InvalidConfig(format!(
                    "window {w} must lie in [1, {}]",
                    self.horizon
                )));
            }
        }
        self.window = window;
        Ok(self)
    }

    pub fn with_lambda_max(mut self, lambda_max: f64) -> Self {
        self.lambda_max = lambda_max;
        self
    }

    pub fn window_len(&self) -> u32 {
        self.window.unwrap_or(self.horizon)
    }

    /// Budget of one window, `B_w = B * T_w / T`.
    pub fn window_budget(&self) -> f64 {
        self.budget * self.window_len() as f64 / self.horizon as f64
    }

    /// Per-step allowance `B_w / T_w`.
    pub fn per_step_allowance(&self) -> f64 {
        self.window_budget() / self.window_len() as f64
    }

    /// Step-size clock: the step index within the current window.
    pub fn eta(&self, t: u32) -> f64 {
        step_size((t % self.window_len()) as u64, self.eta_base)
    }

    /// Projected step on the emissions dual with an explicit step size.
    pub fn apply_emission_subgradient(&mut self, e_t: f64, eta: f64) {
        let allowance = self.per_step_allowance();
        let excess = (e_t - allowance).max(0.0);
        self.history.push(excess);
        self.cumulative_violation += excess;
        self.episode_emissions += e_t;
        if self.pricing_enabled {
            self.lambda = (self.lambda + eta * (e_t - allowance)).clamp(0.0, self.lambda_max);
        }
    }

    /// `lambda <- [lambda + eta_t (e_t - B_w/T_w)]+`, recording the step's
    /// violation `(e_t - B_w/T_w)+`.
    pub fn update_dual_emission(&mut self, e_t: f64, t: u32) -> Result<()> {
        if !(e_t >= 0.0 && e_t.is_finite()) {
            return Err(Error::Domain(format!("emission increment {e_t} must be >= 0")));
        }
        let eta = self.eta(t);
        self.apply_emission_subgradient(e_t, eta);
        Ok(())
    }

    pub fn apply_capacity_subgradient(&mut self, berth: &[u32], crane: &[u32], eta: f64) {
        for (p, &o) in berth.iter().enumerate() {
            self.episode_berth_overflow[p] += o as f64;
            if self.pricing_enabled {
                self.mu[p] = (self.mu[p] + eta * o as f64).max(0.0);
            }
        }
        for (p, &o) in crane.iter().enumerate() {
            self.episode_crane_overflow[p] += o as f64;
            if self.pricing_enabled {
                self.nu[p] = (self.nu[p] + eta * o as f64).max(0.0);
            }
        }
    }

    /// `mu_p <- [mu_p + eta_t (q_berth - C_berth)+]+`, likewise for `nu_p`.
    pub fn update_dual_capacity(&mut self, berth: &[u32], crane: &[u32], t: u32) -> Result<()> {
        if berth.len() != self.mu.len() || crane.len() != self.nu.len() {
            return Err(Error::DimensionMismatch {
                what: "port overflows",
                expected: self.mu.len(),
                got: berth.len().max(crane.len()),
            });
        }
        let eta = self.eta(t);
        self.apply_capacity_subgradient(berth, crane, eta);
        Ok(())
    }

    /// Dual-weighted constraint signal subtracted from every agent's reward.
    pub fn penalty(&self, e_t: f64, berth: &[u32], crane: &[u32]) -> f64 {
        let berth_term: f64 = self.mu.iter().zip(berth).map(|(m, &o)| m * o as f64).sum();
        let crane_term: f64 = self.nu.iter().zip(crane).map(|(n, &o)| n * o as f64).sum();
        self.lambda * e_t + berth_term + crane_term
    }

    pub fn price_reward(&self, r: f64, e_t: f64, berth: &[u32], crane: &[u32]) -> f64 {
        r - self.penalty(e_t, berth, crane)
    }

    /// Episode boundary: archives and clears the violation history; zeroes
    /// the duals in [`DualPersistence::Reset`] mode.
    pub fn reset_episode(&mut self, mode: DualPersistence) {
        self.archive.push(std::mem::take(&mut self.history));
        self.episode_emissions = 0.0;
        self.episode_berth_overflow.iter_mut().for_each(|x| *x = 0.0);
        self.episode_crane_overflow.iter_mut().for_each(|x| *x = 0.0);
        if mode == DualPersistence::Reset {
            self.lambda = 0.0;
            self.mu.iter_mut().for_each(|x| *x = 0.0);
            self.nu.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    pub fn archive(&self) -> &[Vec<f64>] {
        &self.archive
    }

    pub fn episode_emissions(&self) -> f64 {
        self.episode_emissions
    }

    pub fn max_mu(&self) -> f64 {
        self.mu.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_nu(&self) -> f64 {
        self.nu.iter().copied().fold(0.0, f64::max)
    }

    /// Episode Lagrangian at the current duals, given the episode's summed
    /// raw return. Capacity budgets are zero overflow.
    pub fn lagrangian(&self, episode_return: f64) -> f64 {
        let cap: f64 = self
            .mu
            .iter()
            .zip(&self.episode_berth_overflow)
            .chain(self.nu.iter().zip(&self.episode_crane_overflow))
            .map(|(d, o)| d * o)
            .sum();
        episode_return - self.lambda * (self.episode_emissions - self.budget) - cap
    }

    pub fn all_nonnegative(&self) -> bool {
        self.lambda >= 0.0 && self.mu.iter().all(|&m| m >= 0.0) && self.nu.iter().all(|&n| n >= 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ledger(budget: f64, horizon: u32, eta: f64) -> ConstraintLedger {
        ConstraintLedger::new(budget, horizon, 3, eta).unwrap()
    }

    #[test]
    fn step_size_schedule() {
        assert_eq!(step_size(0, 0.1), 0.1);
        assert!((step_size(3, 0.1) - 0.05).abs() < 1e-15);
        assert!((step_size(99, 1.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn emission_dual_substitution() {
        // B/T_w = 2
        let mut l = ledger(20.0, 10, 0.5);
        l.update_dual_emission(3.0, 0).unwrap();
        assert!((l.lambda - 0.5).abs() < 1e-15);
        assert_eq!(l.history(), &[1.0]);
    }

    #[test]
    fn emission_dual_projects_to_zero() {
        let mut l = ledger(20.0, 10, 0.5);
        l.lambda = 0.1;
        l.update_dual_emission(1.0, 0).unwrap();
        assert_eq!(l.lambda, 0.0);
        assert_eq!(l.history(), &[0.0]);
    }

    #[test]
    fn on_budget_stream_keeps_lambda() {
        let mut l = ledger(20.0, 10, 0.3);
        l.lambda = 0.42;
        for t in 0..10 {
            l.update_dual_emission(2.0, t).unwrap();
        }
        assert_eq!(l.lambda, 0.42);
        assert_eq!(l.cumulative_violation, 0.0);
    }

    #[test]
    fn capacity_dual_substitution() {
        let mut l = ledger(1.0, 10, 0.2);
        l.update_dual_capacity(&[1, 0, 0], &[0, 0, 0], 0).unwrap();
        assert!((l.mu[0] - 0.2).abs() < 1e-15);
        assert_eq!(l.nu, vec![0.0; 3]);
    }

    #[test]
    fn capacity_duals_accumulate_fixed_step() {
        let mut l = ledger(1.0, 10, 0.1);
        for o in [1, 0, 2] {
            l.apply_capacity_subgradient(&[o, 0, 0], &[0, 0, 0], 0.1);
        }
        assert!((l.mu[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_overflow_leaves_duals() {
        let mut l = ledger(1.0, 10, 0.1);
        l.mu = vec![0.3, 0.2, 0.1];
        l.update_dual_capacity(&[0; 3], &[0; 3], 4).unwrap();
        assert_eq!(l.mu, vec![0.3, 0.2, 0.1]);
    }

    #[test]
    fn price_reward_examples() {
        let mut l = ledger(1.0, 10, 0.1);
        l.lambda = 0.2;
        assert!((l.price_reward(-5.0, 10.0, &[0; 3], &[0; 3]) - -7.0).abs() < 1e-12);
        l.mu[1] = 0.1;
        assert!((l.price_reward(-5.0, 10.0, &[0, 2, 0], &[0; 3]) - -7.2).abs() < 1e-12);
        let zero = ledger(1.0, 10, 0.1);
        assert_eq!(zero.price_reward(-3.3, 99.0, &[4, 4, 4], &[1, 1, 1]), -3.3);
    }

    #[test]
    fn persist_and_reset_modes() {
        let mut l = ledger(1.0, 10, 0.1);
        l.lambda = 0.7;
        for t in 0..10 {
            l.update_dual_emission(0.5, t).unwrap();
        }
        let lam = l.lambda;
        l.reset_episode(DualPersistence::Persist);
        assert_eq!(l.lambda, lam);
        assert!(l.history().is_empty());
        assert_eq!(l.archive().len(), 1);
        assert_eq!(l.archive()[0].len(), 10);
        l.mu[2] = 1.0;
        l.reset_episode(DualPersistence::Reset);
        assert_eq!(l.lambda, 0.0);
        assert_eq!(l.max_mu(), 0.0);
        assert_eq!(l.max_nu(), 0.0);
    }

    #[test]
    fn frozen_ledger_records_but_does_not_price() {
        let mut l = ledger(10.0, 10, 0.5);
        l.pricing_enabled = false;
        l.update_dual_emission(5.0, 0).unwrap();
        l.update_dual_capacity(&[3, 3, 3], &[1, 1, 1], 0).unwrap();
        assert_eq!(l.lambda, 0.0);
        assert_eq!(l.max_mu(), 0.0);
        assert_eq!(l.history(), &[4.0]);
    }

    #[test]
    fn lambda_is_clipped() {
        let mut l = ledger(0.0, 10, 1.0).with_lambda_max(2.0);
        for t in 0..10 {
            l.update_dual_emission(100.0, t).unwrap();
        }
        assert_eq!(l.lambda, 2.0);
    }

    #[test]
    fn windowed_clock_restarts() {
        let l = ledger(50.0, 50, 0.1).with_window(Some(10)).unwrap();
        assert_eq!(l.eta(10), l.eta(0));
        assert!((l.window_budget() - 10.0).abs() < 1e-12);
        assert!((l.per_step_allowance() - 1.0).abs() < 1e-12);
        assert!(ledger(1.0, 10, 0.1).with_window(Some(11)).is_err());
    }

    #[test]
    fn negative_emission_is_rejected() {
        let mut l = ledger(1.0, 10, 0.1);
        assert!(l.update_dual_emission(-1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn duals_stay_nonnegative(
            stream in prop::collection::vec((0.0f64..10.0, 0u32..4, 0u32..4), 1..200),
            eta in 0.001f64..2.0,
        ) {
            let mut l = ConstraintLedger::new(100.0, 50, 2, eta).unwrap();
            for (t, (e, b, c)) in stream.iter().enumerate() {
                l.update_dual_emission(*e, t as u32).unwrap();
                l.update_dual_capacity(&[*b, 0], &[0, *c], t as u32).unwrap();
                prop_assert!(l.all_nonnegative());
            }
            prop_assert_eq!(l.history().len(), stream.len());
        }

        #[test]
        fn projection_hits_exactly_zero(lam in 0.0f64..1.0, e in 0.0f64..1.0, eta in 0.01f64..5.0) {
            // allowance 2 per step; choose cases where the raw step goes negative
            let mut l = ConstraintLedger::new(20.0, 10, 1, 1.0).unwrap();
            l.lambda = lam;
            prop_assume!(lam + eta * (e - 2.0) < 0.0);
            l.apply_emission_subgradient(e, eta);
            prop_assert_eq!(l.lambda, 0.0);
        }

        #[test]
        fn penalty_is_additive(r1 in -1e3f64..1e3, r2 in -1e3f64..1e3, e in 0.0f64..50.0, lam in 0.0f64..5.0) {
            let mut l = ConstraintLedger::new(1.0, 10, 2, 0.1).unwrap();
            l.lambda = lam;
            l.mu = vec![0.5, 0.25];
            let d1 = l.price_reward(r1, e, &[1, 2], &[0, 1]) - r1;
            let d2 = l.price_reward(r2, e, &[1, 2], &[0, 1]) - r2;
            prop_assert!((d1 - d2).abs() <= 1e-9);
        }
    }
}
