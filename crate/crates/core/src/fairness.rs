//! Inequality measures over per-vessel cumulative costs and the scheduled
//! fairness penalty weight.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_costs(c: &[f64]) -> Result<()> {
    if c.is_empty() {
        return Err(Error::Domain("empty cost vector".into()));
    }
    if let Some(x) = c.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::Domain(format!("cost entry {x} is negative or non-finite")));
    }
    Ok(())
}

/// Gini coefficient `2 sum_i i c_(i) / (N sum c) - (N + 1) / N` over the
/// ascending-sorted costs. An all-zero vector is perfectly equal (0).
pub fn gini(c: &[f64]) -> Result<f64> {
    check_costs(c)?;
    let total: f64 = c.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let mut sorted = c.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (i + 1) as f64 * x)
        .sum();
    let g = 2.0 * weighted / (n * total) - (n + 1.0) / n;
    // clamp the last-ulp rounding at the ends of the range
    Ok(g.clamp(0.0, (n - 1.0) / n))
}

/// `min c / max c`; 1 when every cost is zero.
pub fn minmax(c: &[f64]) -> Result<f64> {
    check_costs(c)?;
    let max = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == 0.0 {
        return Ok(1.0);
    }
    let min = c.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(min / max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FairnessKind {
    #[default]
    Gini,
    /// `1 - MinMax`.
    MinMax,
}

/// Fairness functional; lower is fairer for both kinds.
pub fn phi(c: &[f64], kind: FairnessKind) -> Result<f64> {
    match kind {
        FairnessKind::Gini => gini(c),
        FairnessKind::MinMax => Ok(1.0 - minmax(c)?),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Linear,
    #[default]
    Tracking,
}

/// `min(beta_max, slope * t)`.
pub fn schedule_beta_linear(t: u64, slope: f64, beta_max: f64) -> f64 {
    (slope * t as f64).min(beta_max)
}

/// `min(beta_max, beta + eta (phi - target)+)`.
pub fn schedule_beta_tracking(beta: f64, phi_val: f64, target: f64, eta: f64, beta_max: f64) -> f64 {
    (beta + eta * (phi_val - target).max(0.0)).min(beta_max)
}

/// Subtracts the same `beta * phi` from every agent's reward.
pub fn apply_fairness_penalty(rewards: &mut [f64], beta: f64, phi_val: f64) {
    let penalty = beta * phi_val;
    if penalty != 0.0 {
        rewards.iter_mut().for_each(|r| *r -= penalty);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FairnessParams {
    pub kind: FairnessKind,
    pub schedule: ScheduleKind,
    /// Gini ceiling.
    pub zeta: f64,
    /// MinMax floor.
    pub rho: f64,
    pub beta_max: f64,
    /// Linear schedule slope per global step.
    pub slope: f64,
    /// Tracking schedule rate.
    pub eta_beta: f64,
}

impl Default for FairnessParams {
    fn default() -> Self {
        Self {
            kind: FairnessKind::Gini,
            schedule: ScheduleKind::Tracking,
            zeta: 0.25,
            rho: 0.4,
            beta_max: 50.0,
            slope: 0.0,
            eta_beta: 0.1,
        }
    }
}

impl FairnessParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.beta_max >= 0.0
            && self.slope >= 0.0
            && self.eta_beta >= 0.0
            && (0.0..=1.0).contains(&self.zeta)
            && (0.0..=1.0).contains(&self.rho);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad fairness parameters {self:?}")))
        }
    }

    /// Ceiling on `phi`: `zeta` for Gini, `1 - rho` for `1 - MinMax`.
    pub fn target(&self) -> f64 {
        match self.kind {
            FairnessKind::Gini => self.zeta,
            FairnessKind::MinMax => 1.0 - self.rho,
        }
    }
}

/// Scheduled penalty weight plus the running fairness regret.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessState {
    pub params: FairnessParams,
    pub beta: f64,
    /// When false, beta stays frozen (at zero in the no-fairness ablation).
    pub enabled: bool,
    /// Cumulative `(phi - target)+`.
    pub regret: f64,
    pub last_phi: f64,
}

impl FairnessState {
    pub fn new(params: FairnessParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            beta: 0.0,
            enabled: true,
            regret: 0.0,
            last_phi: 0.0,
        })
    }

    pub fn phi(&self, costs: &[f64]) -> Result<f64> {
        phi(costs, self.params.kind)
    }

    /// One step of the schedule on the current costs. `global_step` drives
    /// the linear schedule. Returns `phi(c)`.
    pub fn update(&mut self, costs: &[f64], global_step: u64) -> Result<f64> {
        let value = self.phi(costs)?;
        let target = self.params.target();
        self.last_phi = value;
        self.regret += (value - target).max(0.0);
        if self.enabled {
            self.beta = match self.params.schedule {
                ScheduleKind::Linear => {
                    schedule_beta_linear(global_step, self.params.slope, self.params.beta_max)
                }
                ScheduleKind::Tracking => schedule_beta_tracking(
                    self.beta,
                    value,
                    target,
                    self.params.eta_beta,
                    self.params.beta_max,
                ),
            };
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Pairwise mean-absolute-difference form, independent of sorting.
    fn gini_oracle(c: &[f64]) -> f64 {
        let n = c.len() as f64;
        let mean = c.iter().sum::<f64>() / n;
        if mean == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for a in c {
            for b in c {
                s += (a - b).abs();
            }
        }
        s / (2.0 * n * n * mean)
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!((gini(&[1.0, 2.0, 3.0]).unwrap() - 8.0 / 36.0).abs() < 1e-12);
        assert!((gini(&[10.0, 20.0, 30.0, 40.0]).unwrap() - 0.25).abs() < 1e-12);
        assert!((gini_oracle(&[1.0, 2.0, 3.0]) - 8.0 / 36.0).abs() < 1e-12);
        assert!((gini_oracle(&[10.0, 20.0, 30.0, 40.0]) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn gini_edge_cases() {
        assert_eq!(gini(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(gini(&[1.0, -1.0]).is_err());
        assert!(gini(&[]).is_err());
        // one agent carries everything: (N-1)/N
        assert!((gini(&[0.0, 0.0, 0.0, 5.0]).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn minmax_examples() {
        assert_eq!(minmax(&[5.0, 5.0]).unwrap(), 1.0);
        assert_eq!(minmax(&[10.0, 20.0, 30.0, 40.0]).unwrap(), 0.25);
        assert_eq!(minmax(&[40.0, 10.0, 30.0, 20.0]).unwrap(), 0.25);
        assert_eq!(minmax(&[0.0, 0.0]).unwrap(), 1.0);
        assert!(minmax(&[-1.0, 2.0]).is_err());
    }

    #[test]
    fn phi_examples() {
        for kind in [FairnessKind::Gini, FairnessKind::MinMax] {
            assert_eq!(phi(&[3.0, 3.0, 3.0], kind).unwrap(), 0.0);
        }
        assert!((phi(&[10.0, 20.0, 30.0, 40.0], FairnessKind::MinMax).unwrap() - 0.75).abs() < 1e-12);
        assert!((phi(&[1.0, 2.0, 3.0], FairnessKind::Gini).unwrap() - 0.2222).abs() < 1e-4);
    }

    #[test]
    fn linear_schedule() {
        assert!((schedule_beta_linear(50, 0.01, 1.0) - 0.5).abs() < 1e-12);
        assert_eq!(schedule_beta_linear(200, 0.01, 1.0), 1.0);
        assert_eq!(schedule_beta_linear(0, 0.37, 9.0), 0.0);
    }

    #[test]
    fn tracking_schedule() {
        assert!((schedule_beta_tracking(0.3, 0.4, 0.25, 0.5, 10.0) - 0.375).abs() < 1e-12);
        assert_eq!(schedule_beta_tracking(0.3, 0.2, 0.25, 0.5, 10.0), 0.3);
        assert_eq!(schedule_beta_tracking(2.0, 0.9, 0.25, 0.5, 2.0), 2.0);
    }

    #[test]
    fn penalty_application() {
        let mut r = vec![-1.0, -2.0];
        apply_fairness_penalty(&mut r, 0.0, 0.8);
        assert_eq!(r, vec![-1.0, -2.0]);
        apply_fairness_penalty(&mut r, 2.0, 0.25);
        assert_eq!(r, vec![-1.5, -2.5]);
        apply_fairness_penalty(&mut r, 7.0, 0.0);
        assert_eq!(r, vec![-1.5, -2.5]);
    }

    #[test]
    fn minmax_kind_targets_floor() {
        let p = FairnessParams {
            kind: FairnessKind::MinMax,
            rho: 0.4,
            ..Default::default()
        };
        assert!((p.target() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn frozen_state_keeps_beta() {
        let mut s = FairnessState::new(FairnessParams::default()).unwrap();
        s.enabled = false;
        s.update(&[1.0, 100.0], 10).unwrap();
        assert_eq!(s.beta, 0.0);
        assert!(s.regret > 0.0);
    }

    fn costs() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..100.0, 2..64)
    }

    proptest! {
        #[test]
        fn matches_pairwise_oracle(c in costs()) {
            prop_assert!((gini(&c).unwrap() - gini_oracle(&c)).abs() < 1e-9);
        }

        #[test]
        fn scale_invariance(c in costs(), alpha in 1e-3f64..1e3) {
            let scaled: Vec<f64> = c.iter().map(|x| x * alpha).collect();
            prop_assert!((gini(&scaled).unwrap() - gini(&c).unwrap()).abs() < 1e-12);
            prop_assert!((minmax(&scaled).unwrap() - minmax(&c).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn permutation_invariance(c in costs(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut p = c.clone();
            p.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert!((gini(&p).unwrap() - gini(&c).unwrap()).abs() < 1e-12);
            prop_assert_eq!(minmax(&p).unwrap(), minmax(&c).unwrap());
        }

        #[test]
        fn ranges(c in costs()) {
            let n = c.len() as f64;
            let g = gini(&c).unwrap();
            prop_assert!((0.0..=(n - 1.0) / n).contains(&g));
            let m = minmax(&c).unwrap();
            prop_assert!((0.0..=1.0).contains(&m));
        }

        #[test]
        fn transfer_from_max_to_min_never_raises_gini(c in costs(), frac in 0.0f64..0.5) {
            let (imax, max) = c.iter().copied().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
            let (imin, min) = c.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
            prop_assume!(imax != imin && max > min);
            let delta = frac * (max - min);
            let mut moved = c.clone();
            moved[imax] -= delta;
            moved[imin] += delta;
            prop_assert!(gini(&moved).unwrap() <= gini(&c).unwrap() + 1e-12);
        }

        #[test]
        fn tracking_beta_monotone_and_capped(phis in prop::collection::vec(0.0f64..1.0, 1..300), eta in 0.0f64..3.0, cap in 0.0f64..10.0) {
            let mut beta = 0.0;
            for p in phis {
                let next = schedule_beta_tracking(beta, p, 0.25, eta, cap);
                prop_assert!(next >= beta || next == cap);
                prop_assert!(next <= cap);
                beta = next;
            }
        }
    }
}
