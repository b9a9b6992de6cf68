//! Synthetic fixtures that check the sublinear-regret behaviour of the dual
//! and fairness-weight updates.
//!
//! Both fixtures drive the production update code ([`ConstraintLedger`] and
//! [`FairnessState`]) with a stylised responsive actor and report the slope
//! of cumulative regret against time on log-log axes. Linear regret has
//! slope 1; the acceptance threshold is 0.6.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::{ConstraintLedger, DEFAULT_ETA_BASE};
use crate::error::{Error, Result};
use crate::fairness::{FairnessParams, FairnessState, ScheduleKind};

pub const SLOPE_THRESHOLD: f64 = 0.6;
/// Tail mean emissions may exceed the per-step allowance by at most 5%.
pub const TAIL_TOLERANCE: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretKind {
    Emissions,
    Fairness,
}

impl std::str::FromStr for RegretKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "emissions" => Ok(Self::Emissions),
            "fairness" => Ok(Self::Fairness),
            other => Err(Error::UnknownMode(other.to_string())),
        }
    }
}

/// Least-squares slope of `ln y` on `ln x` over points with `x, y > 0`.
/// `None` with fewer than two usable points.
pub fn loglog_fit(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Log-log slope of the cumulative sum of `hinges` over `t` in
/// `[lo, len]`, sampled at 60 log-spaced times.
pub fn cumulative_slope(hinges: &[f64], lo: usize) -> Option<f64> {
    let len = hinges.len();
    if len < 2 {
        return None;
    }
    let mut cum = Vec::with_capacity(len);
    let mut acc = 0.0;
    for h in hinges {
        acc += h;
        cum.push(acc);
    }
    let lo = lo.clamp(1, len - 1) as f64;
    let hi = len as f64;
    let samples = 60;
    let mut ts: Vec<usize> = (0..samples)
        .map(|j| (lo * (hi / lo).powf(j as f64 / (samples - 1) as f64)).round() as usize)
        .collect();
    ts.dedup();
    let pts: Vec<(f64, f64)> = ts
        .into_iter()
        .filter(|&t| t >= 1 && t <= len)
        .map(|t| (t as f64, cum[t - 1]))
        .collect();
    loglog_fit(&pts)
}

/// Start of the fitted range: skips the initial transient.
pub fn fit_start(steps: usize) -> usize {
    1000.min(steps / 10).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub kind: RegretKind,
    pub steps: usize,
    /// `None` when the cumulative regret stays at zero.
    pub slope: Option<f64>,
    pub threshold: f64,
    pub cumulative_regret: f64,
    /// Emissions only: mean emissions over the last 20% of steps and the
    /// limit it must respect.
    pub tail_mean: Option<f64>,
    pub tail_limit: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionsFixture {
    /// Per-step allowance `B / T_w`.
    pub allowance: f64,
    /// Emission rate at zero price, as a multiple of the allowance.
    pub base_ratio: f64,
    pub eta_base: f64,
    pub seed: u64,
}

impl Default for EmissionsFixture {
    fn default() -> Self {
        Self {
            allowance: 1.0,
            base_ratio: 1.5,
            eta_base: DEFAULT_ETA_BASE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmissionsTrace {
    /// `(E[e_t | lambda_t] - b)+` per step.
    pub expected_hinge: Vec<f64>,
    /// `(e_t - b)+` per step, as recorded by the ledger.
    pub realised_hinge: Vec<f64>,
    pub emissions: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl EmissionsFixture {
    /// Responsive actor: at price `lambda` it emits `e ~ U[0, 2 r]` with
    /// mean `r = base_ratio * b * exp(-lambda)`.
    pub fn rate(&self, lambda: f64) -> f64 {
        self.base_ratio * self.allowance * (-lambda).exp()
    }

    pub fn run(&self, steps: usize) -> Result<EmissionsTrace> {
        if steps == 0 {
            return Err(Error::InvalidConfig("fixture needs at least one step".into()));
        }
        let horizon = u32::try_from(steps)
            .map_err(|_| Error::InvalidConfig(format!("{steps} steps is too many")))?;
        let mut ledger =
            ConstraintLedger::new(self.allowance * steps as f64, horizon, 0, self.eta_base)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = EmissionsTrace {
            expected_hinge: Vec::with_capacity(steps),
            realised_hinge: Vec::with_capacity(steps),
            emissions: Vec::with_capacity(steps),
            lambda: Vec::with_capacity(steps),
        };
        for t in 0..horizon {
            let rate = self.rate(ledger.lambda);
            let e = rng.random_range(0.0..=2.0 * rate);
            out.expected_hinge.push((rate - self.allowance).max(0.0));
            out.lambda.push(ledger.lambda);
            ledger.update_dual_emission(e, t)?;
            out.emissions.push(e);
        }
        out.realised_hinge = ledger.history().to_vec();
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessFixture {
    /// Unpenalised cost rates per agent.
    pub base_rates: Vec<f64>,
    /// How strongly agents equalise under the penalty weight.
    pub response: f64,
    pub params: FairnessParams,
    pub seed: u64,
}

impl Default for FairnessFixture {
    fn default() -> Self {
        Self {
            base_rates: (0..8).map(|i| (0.4 * i as f64).exp()).collect(),
            response: 0.5,
            params: FairnessParams {
                schedule: ScheduleKind::Tracking,
                ..FairnessParams::default()
            },
            seed: 0,
        }
    }
}

impl FairnessFixture {
    /// Cost rates under weight `beta`: each agent moves toward the mean rate
    /// by a factor `exp(-response * beta)`.
    pub fn rates(&self, beta: f64) -> Vec<f64> {
        let m = self.base_rates.iter().sum::<f64>() / self.base_rates.len() as f64;
        let shrink = (-self.response * beta).exp();
        self.base_rates.iter().map(|r| m + (r - m) * shrink).collect()
    }

    /// Per-step hinge `(phi(c_t) - target)+` on cumulative costs.
    pub fn run(&self, steps: usize) -> Result<Vec<f64>> {
        if self.base_rates.is_empty() || self.base_rates.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidConfig("fixture rates must be positive".into()));
        }
        let mut state = FairnessState::new(self.params.clone())?;
        let target = self.params.target();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut costs = vec![0.0; self.base_rates.len()];
        let mut hinges = Vec::with_capacity(steps);
        for t in 0..steps {
            for (c, r) in costs.iter_mut().zip(self.rates(state.beta)) {
                *c += r * rng.random_range(0.5..1.5);
            }
            let phi = state.update(&costs, t as u64)?;
            hinges.push((phi - target).max(0.0));
        }
        Ok(hinges)
    }
}

fn report_from(kind: RegretKind, hinges: &[f64], tail: Option<(f64, f64)>) -> RegretReport {
    let slope = cumulative_slope(hinges, fit_start(hinges.len()));
    let slope_ok = slope.is_none_or(|s| s <= SLOPE_THRESHOLD);
    let tail_ok = tail.is_none_or(|(m, lim)| m <= lim);
    RegretReport {
        kind,
        steps: hinges.len(),
        slope,
        threshold: SLOPE_THRESHOLD,
        cumulative_regret: hinges.iter().sum(),
        tail_mean: tail.map(|t| t.0),
        tail_limit: tail.map(|t| t.1),
        pass: slope_ok && tail_ok,
    }
}

/// Slope report for an arbitrary per-step hinge sequence.
pub fn report_for_hinges(kind: RegretKind, hinges: &[f64]) -> RegretReport {
    report_from(kind, hinges, None)
}

/// Runs the default fixture of `kind` for `steps` steps.
pub fn verify_regret(kind: RegretKind, steps: usize, seed: u64) -> Result<RegretReport> {
    if steps < 10 {
        return Err(Error::InvalidConfig("regret check needs at least 10 steps".into()));
    }
    match kind {
        RegretKind::Emissions => {
            let fx = EmissionsFixture {
                seed,
                ..EmissionsFixture::default()
            };
            let tr = fx.run(steps)?;
            let tail = &tr.emissions[steps - steps / 5..];
            let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
            Ok(report_from(
                kind,
                &tr.expected_hinge,
                Some((tail_mean, fx.allowance * TAIL_TOLERANCE)),
            ))
        }
        RegretKind::Fairness => {
            let fx = FairnessFixture {
                seed,
                ..FairnessFixture::default()
            };
            Ok(report_from(kind, &fx.run(steps)?, None))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_regret_has_unit_slope() {
        let hinges = vec![0.5; 10_000];
        let r = report_for_hinges(RegretKind::Emissions, &hinges);
        assert!((r.slope.unwrap() - 1.0).abs() < 1e-9);
        assert!(!r.pass);
    }

    #[test]
    fn sqrt_regret_has_half_slope() {
        let hinges: Vec<f64> = (1..=20_000).map(|t| 1.0 / (t as f64).sqrt()).collect();
        let s = report_for_hinges(RegretKind::Fairness, &hinges).slope.unwrap();
        assert!((s - 0.5).abs() < 0.02, "{s}");
    }

    #[test]
    fn zero_regret_passes_without_slope() {
        let r = report_for_hinges(RegretKind::Fairness, &[0.0; 100]);
        assert_eq!(r.slope, None);
        assert!(r.pass);
    }

    #[test]
    fn loglog_fit_recovers_power() {
        let pts: Vec<(f64, f64)> = [10.0, 20.0, 40.0, 80.0]
            .iter()
            .map(|&n| (n, 3.0 * f64::powf(n, 1.2)))
            .collect();
        assert!((loglog_fit(&pts).unwrap() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn unresponsive_actor_has_linear_regret() {
        // price has no effect: emissions stay at 1.5x the allowance
        let fx = EmissionsFixture::default();
        let hinges = vec![(fx.rate(0.0) - fx.allowance).max(0.0); 5_000];
        assert!(!report_for_hinges(RegretKind::Emissions, &hinges).pass);
    }

    #[test]
    fn fixtures_are_deterministic() {
        let a = verify_regret(RegretKind::Emissions, 5_000, 3).unwrap();
        let b = verify_regret(RegretKind::Emissions, 5_000, 3).unwrap();
        assert_eq!(a, b);
        let c = verify_regret(RegretKind::Fairness, 5_000, 3).unwrap();
        let d = verify_regret(RegretKind::Fairness, 5_000, 3).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn fairness_rates_equalise_with_beta() {
        let fx = FairnessFixture::default();
        let g0 = crate::fairness::gini(&fx.rates(0.0)).unwrap();
        let g1 = crate::fairness::gini(&fx.rates(5.0)).unwrap();
        assert!(g0 > fx.params.zeta && g1 < g0 * 0.1, "{g0} {g1}");
    }
}
