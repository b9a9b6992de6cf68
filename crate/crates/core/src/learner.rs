//! Reference learner: parameter-shared linear-softmax policy trained by
//! episodic policy gradient with a running-mean baseline.
//!
//! `pi(a | x) = softmax(W x / temperature)_a`, so
//! `d log pi(a | x) / dW = (onehot(a) - pi) x^T / temperature`.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{MicroAction, Observation, PortPhase, Scenario};
use crate::error::{Error, Result};
use crate::hierarchy::MacroAction;

pub const DEFAULT_LEARNING_RATE: f64 = 5e-4;
pub const DEFAULT_GAMMA: f64 = 0.99;
pub const DEFAULT_ENTROPY_COEF: f64 = 0.01;
pub const DEFAULT_BASELINE_RATE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerParams {
    pub learning_rate: f64,
    pub gamma: f64,
    pub entropy_coef: f64,
    pub temperature: f64,
    /// Exponential rate of the per-time-index running-mean baseline.
    pub baseline_rate: f64,
    /// Standardise advantages over each update batch.
    pub normalize_advantages: bool,
}

impl Default for LearnerParams {
    fn default() -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            gamma: DEFAULT_GAMMA,
            entropy_coef: DEFAULT_ENTROPY_COEF,
            temperature: 1.0,
            baseline_rate: DEFAULT_BASELINE_RATE,
            normalize_advantages: false,
        }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate >= 0.0
            && self.learning_rate.is_finite()
            && self.gamma > 0.0
            && self.gamma <= 1.0
            && self.entropy_coef >= 0.0
            && self.temperature > 0.0
            && self.temperature.is_finite()
            && self.baseline_rate > 0.0
            && self.baseline_rate <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad learner parameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub features: Vec<f64>,
    pub action: usize,
    /// Shaped reward (after pricing and the fairness penalty).
    pub reward: f64,
}

/// One agent's ordered transitions for one episode.
pub type Trajectory = Vec<Transition>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateStats {
    pub samples: usize,
    pub mean_advantage: f64,
    pub grad_norm: f64,
    pub mean_entropy: f64,
}

/// Linear-softmax policy over a discrete action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub features: usize,
    pub actions: usize,
    /// Row-major `actions x features`.
    pub weights: Vec<f64>,
    pub params: LearnerParams,
    baseline: Vec<f64>,
    baseline_seen: Vec<bool>,
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

impl PolicySpec {
    pub fn zeros(features: usize, actions: usize, params: LearnerParams) -> Result<Self> {
        params.validate()?;
        if features == 0 || actions == 0 {
            return Err(Error::InvalidConfig("policy needs >= 1 feature and action".into()));
        }
        Ok(Self {
            features,
            actions,
            weights: vec![0.0; features * actions],
            params,
            baseline: Vec::new(),
            baseline_seen: Vec::new(),
        })
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.features * self.actions {
            return Err(Error::DimensionMismatch {
                what: "policy weights",
                expected: self.features * self.actions,
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidConfig("non-finite policy weight".into()));
        }
        self.weights = weights;
        Ok(self)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.features {
            return Err(Error::DimensionMismatch {
                what: "feature vector",
                expected: self.features,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let tau = self.params.temperature;
        Ok(self
            .weights
            .chunks_exact(self.features)
            .map(|row| row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() / tau)
            .collect())
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.logits(x)?;
        softmax_in_place(&mut z);
        Ok(z)
    }

    pub fn log_prob(&self, x: &[f64], action: usize) -> Result<f64> {
        let z = self.logits(x)?;
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        Ok(z[action] - lse)
    }

    /// Samples an action; returns it with its log-probability.
    pub fn act(&self, x: &[f64], rng: &mut impl Rng) -> Result<(usize, f64)> {
        let p = self.probabilities(x)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.actions - 1;
        for (a, pa) in p.iter().enumerate() {
            acc += pa;
            if u < acc {
                chosen = a;
                break;
            }
        }
        // the tail slack can only select an action with positive mass
        while p[chosen] == 0.0 && chosen > 0 {
            chosen -= 1;
        }
        Ok((chosen, p[chosen].ln()))
    }

    pub fn entropy(&self, x: &[f64]) -> Result<f64> {
        let p = self.probabilities(x)?;
        Ok(-p.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>())
    }

    /// Analytic `d log pi(action | x) / dW`, row-major like `weights`.
    pub fn grad_log_prob(&self, x: &[f64], action: usize) -> Result<Vec<f64>> {
        let p = self.probabilities(x)?;
        let tau = self.params.temperature;
        let mut g = vec![0.0; self.weights.len()];
        for (b, row) in g.chunks_exact_mut(self.features).enumerate() {
            let coeff = (if b == action { 1.0 } else { 0.0 } - p[b]) / tau;
            for (gj, xj) in row.iter_mut().zip(x) {
                *gj = coeff * xj;
            }
        }
        Ok(g)
    }

    /// Analytic gradient of the policy entropy at `x`.
    pub fn grad_entropy(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.probabilities(x)?;
        let h = -p.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>();
        let tau = self.params.temperature;
        let mut g = vec![0.0; self.weights.len()];
        for (b, row) in g.chunks_exact_mut(self.features).enumerate() {
            let log_p = if p[b] > 0.0 { p[b].ln() } else { 0.0 };
            let coeff = -p[b] * (log_p + h) / tau;
            for (gj, xj) in row.iter_mut().zip(x) {
                *gj = coeff * xj;
            }
        }
        Ok(g)
    }

    /// Current baseline for time index `t`.
    pub fn baseline(&self, t: usize) -> f64 {
        self.baseline.get(t).copied().unwrap_or(0.0)
    }

    /// Discounted returns-to-go of a reward sequence.
    pub fn returns_to_go(rewards: &[f64], gamma: f64) -> Vec<f64> {
        let mut out = vec![0.0; rewards.len()];
        let mut acc = 0.0;
        for (i, r) in rewards.iter().enumerate().rev() {
            acc = r + gamma * acc;
            out[i] = acc;
        }
        out
    }

    /// Policy-gradient step over a batch of trajectories.
    ///
    /// Advantage is the discounted return-to-go minus the running-mean
    /// baseline for the same time index, optionally standardised over the
    /// batch. The step is
    /// `W += lr / M * sum_m sum_t [A_t grad log pi + c_ent grad H]` over the
    /// `M` trajectories.
    pub fn update(&mut self, trajectories: &[Trajectory]) -> Result<UpdateStats> {
        let gamma = self.params.gamma;
        let horizon = trajectories.iter().map(Vec::len).max().unwrap_or(0);
        if horizon == 0 {
            return Ok(UpdateStats::default());
        }
        if self.baseline.len() < horizon {
            self.baseline.resize(horizon, 0.0);
            self.baseline_seen.resize(horizon, false);
        }
        let returns: Vec<Vec<f64>> = trajectories
            .iter()
            .map(|tr| {
                let r: Vec<f64> = tr.iter().map(|s| s.reward).collect();
                Self::returns_to_go(&r, gamma)
            })
            .collect();

        let mut advantages: Vec<Vec<f64>> = returns
            .iter()
            .map(|ret| ret.iter().enumerate().map(|(t, g)| g - self.baseline(t)).collect())
            .collect();
        let samples: usize = advantages.iter().map(Vec::len).sum();
        let adv_sum: f64 = advantages.iter().flatten().sum();
        if self.params.normalize_advantages && samples > 1 {
            let mean = adv_sum / samples as f64;
            let var = advantages.iter().flatten().map(|a| (a - mean).powi(2)).sum::<f64>()
                / samples as f64;
            let scale = 1.0 / (var.sqrt() + 1e-8);
            advantages
                .iter_mut()
                .flatten()
                .for_each(|a| *a = (*a - mean) * scale);
        }

        let mut grad = vec![0.0; self.weights.len()];
        let mut ent_sum = 0.0;
        for (tr, adv) in trajectories.iter().zip(&advantages) {
            for (step, &advantage) in tr.iter().zip(adv) {
                if step.action >= self.actions {
                    return Err(Error::DimensionMismatch {
                        what: "action index",
                        expected: self.actions,
                        got: step.action,
                    });
                }
                if advantage != 0.0 {
                    let glp = self.grad_log_prob(&step.features, step.action)?;
                    grad.iter_mut().zip(&glp).for_each(|(a, b)| *a += advantage * b);
                }
                if self.params.entropy_coef > 0.0 {
                    ent_sum += self.entropy(&step.features)?;
                    let ge = self.grad_entropy(&step.features)?;
                    let c = self.params.entropy_coef;
                    grad.iter_mut().zip(&ge).for_each(|(a, b)| *a += c * b);
                }
            }
        }
        let scale = self.params.learning_rate / trajectories.len() as f64;
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !norm.is_finite() {
            let bad = grad.iter().position(|g| !g.is_finite()).unwrap_or(0);
            return Err(Error::NonFiniteGradient(format!(
                "entry {bad} (action {}, feature {}) is {} over {samples} samples",
                bad / self.features,
                bad % self.features,
                grad[bad]
            )));
        }
        self.weights
            .iter_mut()
            .zip(&grad)
            .for_each(|(w, g)| *w += scale * g);

        // refresh the baseline with this batch's mean returns
        let rate = self.params.baseline_rate;
        for t in 0..horizon {
            let vals: Vec<f64> = returns.iter().filter_map(|r| r.get(t).copied()).collect();
            if vals.is_empty() {
                continue;
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            if self.baseline_seen[t] {
                self.baseline[t] += rate * (mean - self.baseline[t]);
            } else {
                self.baseline[t] = mean;
                self.baseline_seen[t] = true;
            }
        }

        Ok(UpdateStats {
            samples,
            mean_advantage: adv_sum / samples.max(1) as f64,
            grad_norm: norm,
            mean_entropy: ent_sum / samples.max(1) as f64,
        })
    }

    /// Text checkpoint: a `ecofair-policy 1` line, an `<actions> <features>`
    /// line, then one line of space-separated weights per action row.
    pub fn to_checkpoint(&self) -> String {
        let mut s = format!("ecofair-policy 1\n{} {}\n", self.actions, self.features);
        for row in self.weights.chunks_exact(self.features) {
            let line: Vec<String> = row.iter().map(|w| format!("{w:?}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_checkpoint(text: &str, params: LearnerParams) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("ecofair-policy 1") {
            return Err(bad("missing header"));
        }
        let dims: Vec<usize> = lines
            .next()
            .ok_or_else(|| bad("missing dimensions"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad dimension")))
            .collect::<Result<_>>()?;
        let [actions, features] = dims[..] else {
            return Err(bad("expected `<actions> <features>`"));
        };
        let mut weights = Vec::with_capacity(actions * features);
        for _ in 0..actions {
            let row = lines.next().ok_or_else(|| bad("missing weight row"))?;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| bad("bad weight")))
                .collect::<Result<_>>()?;
            if vals.len() != features {
                return Err(bad("weight row has wrong length"));
            }
            weights.extend(vals);
        }
        Self::zeros(features, actions, params)?.with_weights(weights)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_checkpoint()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, params: LearnerParams) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&text, params)
    }
}

/// Length of [`featurize`] output.
///
/// Ordering:
/// 0 bias (1),
/// 1 speed / v_max,
/// 2 fuel level / capacity,
/// 3 fraction of the current leg sailed,
/// 4 docked flag,
/// 5 queued-for-berth flag,
/// 6 anchored-at-destination flag,
/// 7 local berth queue / berth capacity,
/// 8 local crane queue / crane capacity,
/// 9..=11 weather one-hot (calm, swell, storm),
/// 12 remaining envelope fraction in [-1, 1],
/// 13 schedule slack: (hours to window close - nominal hours left) / 10, in [-2, 2],
/// 14 hull coefficient / 2,
/// 15 failure flag,
/// 16 own cost rate: cumulative cost / (t + 1) / 3.
pub const LOW_FEATURES: usize = 17;

pub fn featurize(obs: &Observation, macro_action: &MacroAction) -> Vec<f64> {
    let mut x = vec![0.0; LOW_FEATURES];
    x[0] = 1.0;
    x[1] = obs.speed / obs.v_max;
    x[2] = obs.fuel_level / obs.fuel_capacity;
    x[3] = obs.lane_fraction;
    x[4] = f64::from(u8::from(obs.docked_phase.is_some()));
    x[5] = f64::from(u8::from(obs.docked_phase == Some(PortPhase::Queued)));
    x[6] = f64::from(u8::from(obs.docked_phase == Some(PortPhase::Anchored)));
    x[7] = obs.local_berth_queue as f64 / obs.local_berth_capacity as f64;
    x[8] = obs.local_crane_queue as f64 / obs.local_crane_capacity as f64;
    x[9 + match obs.weather {
        Scenario::Calm => 0,
        Scenario::Swell => 1,
        Scenario::Storm => 2,
    }] = 1.0;
    let envelope = macro_action
        .directives
        .get(obs.agent)
        .map(|d| d.envelope)
        .unwrap_or(obs.directive.envelope);
    x[12] = if envelope > 0.0 {
        ((envelope - obs.window_emissions) / envelope).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    x[13] = if obs.arrived {
        0.0
    } else {
        ((obs.hours_to_window_close - obs.nominal_hours_remaining) / 10.0).clamp(-2.0, 2.0)
    };
    x[14] = obs.hull_coefficient / 2.0;
    x[15] = f64::from(u8::from(!obs.healthy));
    x[16] = obs.cumulative_cost / (obs.t as f64 + 1.0) / 3.0;
    x
}

/// Joint feature vector for the centralised ablation: every agent's
/// [`featurize`] block, the deciding agent's block first and the others in
/// id order. Each block keeps its bias entry, so the length is exactly
/// `N * LOW_FEATURES`.
pub fn featurize_centralised(blocks: &[Vec<f64>], ego: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(blocks.len() * LOW_FEATURES);
    x.extend_from_slice(&blocks[ego]);
    for (i, b) in blocks.iter().enumerate() {
        if i != ego {
            x.extend_from_slice(b);
        }
    }
    x
}

/// Low-level action count for a speed grid: speeds x request flag x detour flag.
pub fn micro_action_count(speed_levels: usize) -> usize {
    speed_levels * 4
}

pub fn decode_micro(index: usize) -> MicroAction {
    let request = (index / 2) % 2 == 1;
    MicroAction {
        speed_index: index / 4,
        berth_request: request,
        crane_request: request,
        detour: index % 2 == 1,
    }
}

pub fn encode_micro(a: &MicroAction) -> usize {
    a.speed_index * 4 + usize::from(a.berth_request) * 2 + usize::from(a.detour)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMode {
    #[default]
    Full,
    NoConstraints,
    NoFairness,
    FlatDecentralised,
    Centralised,
    HierOnly,
}

impl BaselineMode {
    pub const ALL: [BaselineMode; 6] = [
        BaselineMode::Full,
        BaselineMode::NoConstraints,
        BaselineMode::NoFairness,
        BaselineMode::FlatDecentralised,
        BaselineMode::Centralised,
        BaselineMode::HierOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineMode::Full => "full",
            BaselineMode::NoConstraints => "no-constraints",
            BaselineMode::NoFairness => "no-fairness",
            BaselineMode::FlatDecentralised => "flat-decentralised",
            BaselineMode::Centralised => "centralised",
            BaselineMode::HierOnly => "hier-only",
        }
    }
}

impl std::str::FromStr for BaselineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMode(s.to_string()))
    }
}

impl std::fmt::Display for BaselineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which layers a baseline mode switches on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeSettings {
    pub mode: BaselineMode,
    /// Emission and capacity duals are updated and priced.
    pub constraints: bool,
    /// The fairness weight follows its schedule.
    pub fairness: bool,
    /// Macro decisions come from the high-level policy every `tau_h` steps;
    /// otherwise one fixed macro (shortest route, nominal window) spans the
    /// whole episode.
    pub hierarchy: bool,
    /// One policy over the concatenation of every agent's features.
    pub centralised: bool,
}

pub fn configure_baseline(mode: BaselineMode) -> ModeSettings {
    let (constraints, fairness, hierarchy, centralised) = match mode {
        BaselineMode::Full => (true, true, true, false),
        BaselineMode::NoConstraints => (false, true, true, false),
        BaselineMode::NoFairness => (true, false, true, false),
        BaselineMode::FlatDecentralised => (false, false, false, false),
        BaselineMode::Centralised => (true, true, false, true),
        BaselineMode::HierOnly => (false, false, true, false),
    };
    ModeSettings {
        mode,
        constraints,
        fairness,
        hierarchy,
        centralised,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> LearnerParams {
        LearnerParams::default()
    }

    #[test]
    fn zero_weights_are_uniform() {
        let p = PolicySpec::zeros(3, 4, params()).unwrap();
        let probs = p.probabilities(&[1.0, -2.0, 0.5]).unwrap();
        for q in &probs {
            assert!((q - 0.25).abs() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, lp) = p.act(&[1.0, 0.0, 0.0], &mut rng).unwrap();
        assert!((lp + 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn saturated_row_dominates() {
        let mut w = vec![0.0; 3 * 2];
        w[2 * 2] = 1e3; // action 2, feature 0
        let p = PolicySpec::zeros(2, 3, params()).unwrap().with_weights(w).unwrap();
        let probs = p.probabilities(&[1.0, 0.0]).unwrap();
        assert!(probs[2] > 0.999);
    }

    #[test]
    fn high_temperature_flattens() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut lp = params();
        lp.temperature = 1e3;
        let p = PolicySpec::zeros(3, 4, lp).unwrap().with_weights(w).unwrap();
        let probs = p.probabilities(&[1.0, 0.5, -0.5]).unwrap();
        let kl: f64 = probs.iter().map(|q| q * (q / 0.25).ln()).sum();
        assert!(kl < 1e-3, "kl {kl}");
    }

    #[test]
    fn probabilities_normalised_and_logprob_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w: Vec<f64> = (0..20).map(|_| rng.random_range(-3.0..3.0)).collect();
        let p = PolicySpec::zeros(4, 5, params()).unwrap().with_weights(w).unwrap();
        let x = [1.0, 0.3, -0.7, 2.0];
        let probs = p.probabilities(&x).unwrap();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for _ in 0..50 {
            let (a, lp) = p.act(&x, &mut rng).unwrap();
            assert!((lp - probs[a].ln()).abs() < 1e-12);
            assert!((lp - p.log_prob(&x, a).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let p = PolicySpec::zeros(3, 2, params()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            p.act(&[1.0, 2.0], &mut rng),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_advantage_leaves_parameters() {
        let mut lp = params();
        lp.entropy_coef = 0.0;
        lp.gamma = 1.0;
        let mut p = PolicySpec::zeros(2, 3, lp).unwrap();
        // constant zero reward: returns equal the (zero) initial baseline
        let tr = vec![
            Transition {
                features: vec![1.0, 0.5],
                action: 1,
                reward: 0.0,
            };
            4
        ];
        let before = p.weights.clone();
        p.update(&[tr]).unwrap();
        assert_eq!(p.weights, before);
    }

    #[test]
    fn positive_advantage_raises_probability() {
        let mut lp = params();
        lp.entropy_coef = 0.0;
        lp.learning_rate = 0.1;
        let mut p = PolicySpec::zeros(2, 3, lp).unwrap();
        let x = vec![1.0, -0.4];
        let before = p.probabilities(&x).unwrap()[2];
        p.update(&[vec![Transition {
            features: x.clone(),
            action: 2,
            reward: 1.0,
        }]])
        .unwrap();
        let after = p.probabilities(&x).unwrap()[2];
        assert!(after > before, "{before} -> {after}");
    }

    #[test]
    fn returns_to_go_discounting() {
        let g = PolicySpec::returns_to_go(&[1.0, 1.0, 1.0], 0.5);
        assert_eq!(g, vec![1.75, 1.5, 1.0]);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = PolicySpec::zeros(3, 2, params()).unwrap().with_weights(w).unwrap();
        let text = p.to_checkpoint();
        assert!(text.starts_with("ecofair-policy 1\n2 3\n"));
        let q = PolicySpec::from_checkpoint(&text, params()).unwrap();
        assert_eq!(p.weights, q.weights);
        assert!(PolicySpec::from_checkpoint("garbage", params()).is_err());
    }

    #[test]
    fn micro_codec_round_trip() {
        for i in 0..micro_action_count(5) {
            assert_eq!(encode_micro(&decode_micro(i)), i);
        }
    }

    #[test]
    fn mode_switches() {
        assert!(!configure_baseline(BaselineMode::NoConstraints).constraints);
        assert!(configure_baseline(BaselineMode::NoConstraints).fairness);
        assert!(!configure_baseline(BaselineMode::NoFairness).fairness);
        let flat = configure_baseline(BaselineMode::FlatDecentralised);
        assert!(!flat.hierarchy && !flat.constraints && !flat.fairness);
        assert!(configure_baseline(BaselineMode::Centralised).centralised);
        let hier = configure_baseline(BaselineMode::HierOnly);
        assert!(hier.hierarchy && !hier.constraints && !hier.fairness);
        assert!("bogus".parse::<BaselineMode>().is_err());
        for m in BaselineMode::ALL {
            assert_eq!(m.name().parse::<BaselineMode>().unwrap(), m);
        }
    }

    #[test]
    fn centralised_features_put_ego_first() {
        let blocks: Vec<Vec<f64>> = (0..3).map(|i| vec![i as f64; LOW_FEATURES]).collect();
        let x = featurize_centralised(&blocks, 1);
        assert_eq!(x.len(), 3 * LOW_FEATURES);
        assert_eq!(x[0], 1.0);
        assert_eq!(x[LOW_FEATURES], 0.0);
        assert_eq!(x[2 * LOW_FEATURES], 2.0);
    }
}
