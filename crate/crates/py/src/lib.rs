//! Python bindings for the simulator, the pricing and fairness primitives,
//! the policy and the experiment runner.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ecofair_core::constraint::{self, ConstraintLedger};
use ecofair_core::env::generator::{generate, GeneratorParams};
use ecofair_core::env::{EnvConfig, FleetState, TwinEnv};
use ecofair_core::fairness::{self, FairnessKind};
use ecofair_core::harness::output::metric_columns;
use ecofair_core::harness::{run_experiment, verify_regret as core_verify_regret, write_outcome, EpisodeRecord, RunConfig};
use ecofair_core::hierarchy::{default_macro, HierarchyParams, HighLevelContext, MacroAction, MacroClock};
use ecofair_core::learner::{decode_micro, featurize, micro_action_count, LearnerParams, PolicySpec};
use ecofair_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Invariant(_) | Error::NonFiniteGradient(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyfunction]
fn gini(costs: Vec<f64>) -> PyResult<f64> {
    fairness::gini(&costs).map_err(py_err)
}

#[pyfunction]
fn minmax(costs: Vec<f64>) -> PyResult<f64> {
    fairness::minmax(&costs).map_err(py_err)
}

/// Fairness functional: `kind` is "gini" or "minmax" (giving 1 - MinMax).
#[pyfunction]
#[pyo3(signature = (costs, kind = "gini"))]
fn phi(costs: Vec<f64>, kind: &str) -> PyResult<f64> {
    let kind = match kind {
        "gini" => FairnessKind::Gini,
        "minmax" => FairnessKind::MinMax,
        other => return Err(PyValueError::new_err(format!("unknown fairness kind {other:?}"))),
    };
    fairness::phi(&costs, kind).map_err(py_err)
}

#[pyfunction]
fn step_size(t: u64, eta_base: f64) -> f64 {
    constraint::step_size(t, eta_base)
}

/// Emission and capacity duals with projected subgradient updates.
#[pyclass(name = "ConstraintLedger")]
struct PyLedger {
    inner: ConstraintLedger,
}

#[pymethods]
impl PyLedger {
    #[new]
    #[pyo3(signature = (budget, horizon, ports = 0, eta_base = constraint::DEFAULT_ETA_BASE))]
    fn new(budget: f64, horizon: u32, ports: usize, eta_base: f64) -> PyResult<Self> {
        Ok(Self {
            inner: ConstraintLedger::new(budget, horizon, ports, eta_base).map_err(py_err)?,
        })
    }

    fn update_emission(&mut self, emissions: f64, t: u32) -> PyResult<f64> {
        self.inner.update_dual_emission(emissions, t).map_err(py_err)?;
        Ok(self.inner.lambda)
    }

    fn update_capacity(&mut self, berth_overflow: Vec<u32>, crane_overflow: Vec<u32>, t: u32) -> PyResult<()> {
        self.inner
            .update_dual_capacity(&berth_overflow, &crane_overflow, t)
            .map_err(py_err)
    }

    fn price_reward(&self, reward: f64, emissions: f64, berth_overflow: Vec<u32>, crane_overflow: Vec<u32>) -> f64 {
        self.inner
            .price_reward(reward, emissions, &berth_overflow, &crane_overflow)
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn mu(&self) -> Vec<f64> {
        self.inner.mu.clone()
    }

    #[getter]
    fn nu(&self) -> Vec<f64> {
        self.inner.nu.clone()
    }
}

/// Linear-softmax policy.
#[pyclass(name = "Policy")]
struct PyPolicy {
    inner: PolicySpec,
}

#[pymethods]
impl PyPolicy {
    #[new]
    #[pyo3(signature = (features, actions, temperature = 1.0, weights = None))]
    fn new(features: usize, actions: usize, temperature: f64, weights: Option<Vec<f64>>) -> PyResult<Self> {
        let params = LearnerParams {
            temperature,
            ..LearnerParams::default()
        };
        let mut inner = PolicySpec::zeros(features, actions, params).map_err(py_err)?;
        if let Some(w) = weights {
            inner = inner.with_weights(w).map_err(py_err)?;
        }
        Ok(Self { inner })
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    fn probabilities(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.probabilities(&x).map_err(py_err)
    }

    fn log_prob(&self, x: Vec<f64>, action: usize) -> PyResult<f64> {
        self.inner.log_prob(&x, action).map_err(py_err)
    }

    fn grad_log_prob(&self, x: Vec<f64>, action: usize) -> PyResult<Vec<f64>> {
        self.inner.grad_log_prob(&x, action).map_err(py_err)
    }

    fn entropy(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.entropy(&x).map_err(py_err)
    }
}

const EPISODE_HOURS: u32 = 50;

/// Simulator driven directly by micro action indices. Every vessel follows
/// its shortest route with the nominal arrival window.
#[pyclass(name = "Env")]
struct PyEnv {
    env: TwinEnv,
    state: FleetState,
    plan: MacroAction,
}

impl PyEnv {
    fn build(cfg: EnvConfig, seed: u64) -> PyResult<Self> {
        let env = TwinEnv::new(cfg).map_err(py_err)?;
        let state = env.reset(seed);
        let plan = Self::plan(&env, &state)?;
        Ok(Self { env, state, plan })
    }

    fn plan(env: &TwinEnv, state: &FleetState) -> PyResult<MacroAction> {
        // one epoch spanning a default-length episode under a budget that never binds
        let clock = MacroClock::new(EPISODE_HOURS, EPISODE_HOURS).map_err(py_err)?;
        let budget = env.emission_bound() * f64::from(EPISODE_HOURS);
        let ctx = HighLevelContext::from_state(state, &clock, budget, 0.0);
        default_macro(env, state, &ctx, &HierarchyParams::default()).map_err(py_err)
    }
}

#[pymethods]
impl PyEnv {
    #[staticmethod]
    #[pyo3(signature = (ports, vessels, seed = 0))]
    fn generate(ports: usize, vessels: usize, seed: u64) -> PyResult<Self> {
        Self::build(generate(&GeneratorParams::new(ports, vessels, seed)).map_err(py_err)?, seed)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Self::build(EnvConfig::from_json(text).map_err(py_err)?, 0)
    }

    fn reset(&mut self, seed: u64) -> PyResult<()> {
        self.state = self.env.reset(seed);
        self.plan = Self::plan(&self.env, &self.state)?;
        Ok(())
    }

    #[getter]
    fn num_vessels(&self) -> usize {
        self.env.num_vessels()
    }

    #[getter]
    fn num_ports(&self) -> usize {
        self.env.num_ports()
    }

    #[getter]
    fn num_actions(&self) -> usize {
        micro_action_count(self.env.speed_grid().len())
    }

    #[getter]
    fn t(&self) -> u32 {
        self.state.t
    }

    #[getter]
    fn cumulative_emissions(&self) -> f64 {
        self.state.cumulative_emissions
    }

    #[getter]
    fn cumulative_cost(&self) -> Vec<f64> {
        self.state.cumulative_cost.clone()
    }

    /// Policy features of `agent`'s local observation.
    fn features(&self, agent: usize) -> PyResult<Vec<f64>> {
        let obs = self.env.observe(&self.state, agent, &self.plan).map_err(py_err)?;
        Ok(featurize(&obs, &self.plan))
    }

    /// Advances one hour. Returns emissions, per-vessel rewards and the
    /// post-resolution berth occupancy.
    fn step<'py>(&mut self, py: Python<'py>, actions: Vec<usize>) -> PyResult<Bound<'py, PyDict>> {
        let limit = self.num_actions();
        if let Some(a) = actions.iter().find(|&&a| a >= limit) {
            return Err(PyValueError::new_err(format!("action {a} out of range 0..{limit}")));
        }
        let micro: Vec<_> = actions.into_iter().map(decode_micro).collect();
        let m = self
            .env
            .step(&mut self.state, &micro, &self.plan)
            .map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("emissions", m.emissions)?;
        d.set_item("rewards", m.rewards)?;
        d.set_item("berth_occupancy", m.berth_occupancy)?;
        d.set_item("crane_occupancy", m.crane_occupancy)?;
        d.set_item("berth_overflow", m.berth_overflow)?;
        d.set_item("crane_overflow", m.crane_overflow)?;
        Ok(d)
    }
}

fn record_dict<'py>(py: Python<'py>, r: &EpisodeRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("episode", r.episode)?;
    d.set_item("seed", r.seed)?;
    for (k, v) in metric_columns().iter().zip(r.metrics()) {
        d.set_item(*k, v)?;
    }
    Ok(d)
}

/// Trains every seed of a run config. Returns the budget and per-seed
/// episode records; writes CSVs when `out` is given.
#[pyfunction]
#[pyo3(signature = (config, mode = None, seeds = None, out = None))]
fn run<'py>(
    py: Python<'py>,
    config: PathBuf,
    mode: Option<&str>,
    seeds: Option<Vec<u64>>,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = RunConfig::load(&config).map_err(py_err)?;
    if let Some(m) = mode {
        cfg.mode = m.parse().map_err(py_err)?;
    }
    if let Some(s) = seeds {
        cfg.seeds = s;
    }
    cfg.output_dir = out.clone();
    let outcome = py.detach(|| run_experiment(&cfg)).map_err(py_err)?;
    if let Some(dir) = &out {
        write_outcome(&outcome, dir).map_err(py_err)?;
    }
    let d = PyDict::new(py);
    d.set_item("mode", outcome.mode.name())?;
    d.set_item("budget", outcome.budget)?;
    d.set_item("capacity_violations", outcome.capacity_violations())?;
    let per_seed = PyDict::new(py);
    for s in &outcome.seeds {
        let rows = s
            .records
            .iter()
            .map(|r| record_dict(py, r))
            .collect::<PyResult<Vec<_>>>()?;
        per_seed.set_item(s.seed, rows)?;
    }
    d.set_item("seeds", per_seed)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (kind, steps = 100_000, seed = 0))]
fn verify_regret<'py>(py: Python<'py>, kind: &str, steps: usize, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let kind = kind.parse().map_err(py_err)?;
    let r = py.detach(|| core_verify_regret(kind, steps, seed)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("slope", r.slope)?;
    d.set_item("threshold", r.threshold)?;
    d.set_item("cumulative_regret", r.cumulative_regret)?;
    d.set_item("tail_mean", r.tail_mean)?;
    d.set_item("tail_limit", r.tail_limit)?;
    d.set_item("pass", r.pass)?;
    Ok(d)
}

#[pymodule]
fn ecofair(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gini, m)?)?;
    m.add_function(wrap_pyfunction!(minmax, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(step_size, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify_regret, m)?)?;
    m.add_class::<PyLedger>()?;
    m.add_class::<PyPolicy>()?;
    m.add_class::<PyEnv>()?;
    Ok(())
}
