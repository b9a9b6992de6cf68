use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ecofair_core::env::generator::{generate, GeneratorParams};
use ecofair_core::env::TwinEnv;
use ecofair_core::harness::{
    build_env, read_run_dir, run_mode, write_outcome, Phase, RunConfig, SeedRun,
};
use ecofair_core::hierarchy::{default_macro, HierarchyParams, HighLevelContext, MacroClock};
use ecofair_core::learner::{decode_micro, micro_action_count, BaselineMode, PolicySpec};

fn desk(episodes: usize) -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk_4x8.json");
    let mut cfg = RunConfig::load(path).unwrap();
    cfg.episodes = episodes;
    cfg.seeds = vec![5];
    cfg
}

#[test]
fn hourly_phases_run_in_order() {
    let cfg = desk(1);
    let env = build_env(&cfg).unwrap();
    let mut run = SeedRun::new(&env, &cfg, BaselineMode::Full, 5, 1000.0).unwrap();
    run.enable_trace();
    run.run_episode().unwrap();
    let trace = run.take_trace();
    let step = [
        Phase::Observe,
        Phase::Act,
        Phase::EnvStep,
        Phase::DualUpdate,
        Phase::BetaUpdate,
        Phase::Shape,
        Phase::Store,
    ];
    let mut expected = Vec::new();
    for t in 0..cfg.horizon {
        if t % cfg.hierarchy.tau_h == 0 {
            expected.push((t, Phase::Macro));
        }
        expected.extend(step.iter().map(|&p| (t, p)));
    }
    expected.push((cfg.horizon, Phase::LearnerUpdate));
    let got: Vec<_> = trace.iter().map(|e| (e.t, e.phase)).collect();
    assert_eq!(got, expected);
}

#[test]
fn flat_modes_take_one_macro_decision() {
    let cfg = desk(1);
    let env = build_env(&cfg).unwrap();
    let mut run = SeedRun::new(&env, &cfg, BaselineMode::FlatDecentralised, 5, 1000.0).unwrap();
    run.enable_trace();
    run.run_episode().unwrap();
    let macros = run
        .take_trace()
        .iter()
        .filter(|e| e.phase == Phase::Macro)
        .count();
    assert_eq!(macros, 1);
}

#[test]
fn ablations_switch_off_their_terms() {
    let cfg = desk(6);
    let env = build_env(&cfg).unwrap();
    for mode in BaselineMode::ALL {
        let out = run_mode(&env, &cfg, mode, 800.0, false).unwrap();
        let s = &out.seeds[0];
        for r in &s.records {
            if matches!(
                mode,
                BaselineMode::NoConstraints | BaselineMode::FlatDecentralised | BaselineMode::HierOnly
            ) {
                assert_eq!(r.lambda_final, 0.0, "{mode}");
                assert_eq!(r.max_mu, 0.0);
                assert_eq!(r.max_nu, 0.0);
                assert_eq!(r.priced_return, r.total_return, "{mode}");
            }
            if matches!(mode, BaselineMode::NoFairness | BaselineMode::FlatDecentralised | BaselineMode::HierOnly) {
                assert_eq!(r.beta_final, 0.0, "{mode}");
                assert_eq!(r.shaped_return, r.priced_return, "{mode}");
            }
            assert!(r.lambda_final >= 0.0 && r.lambda_final <= cfg.constraint.lambda_max);
            assert!(r.gini >= 0.0 && r.gini < 1.0);
            assert!(r.minmax >= 0.0 && r.minmax <= 1.0);
        }
    }
}

#[test]
fn macro_log_has_one_row_per_epoch_and_vessel() {
    let cfg = desk(2);
    let env = build_env(&cfg).unwrap();
    let mut run = SeedRun::new(&env, &cfg, BaselineMode::Full, 5, 1000.0).unwrap();
    run.enable_macro_log();
    run.run(2).unwrap();
    let rows = run.take_macro_log();
    let epochs = cfg.horizon.div_ceil(cfg.hierarchy.tau_h) as usize;
    assert_eq!(epochs, 5);
    assert_eq!(rows.len(), 2 * epochs * env.num_vessels());
    for ep in 0..2 {
        for k in 0..epochs {
            let envelopes: f64 = rows
                .iter()
                .filter(|r| r.episode == ep && r.epoch == k)
                .map(|r| r.envelope)
                .sum();
            assert!(envelopes <= 1000.0 * 10.0 / 50.0 + 1e-9);
        }
    }
}

#[test]
fn written_outputs_read_back() {
    let cfg = desk(5);
    let env = build_env(&cfg).unwrap();
    let out = run_mode(&env, &cfg, BaselineMode::Full, 900.0, true).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = write_outcome(&out, dir.path()).unwrap();
    assert!(files.iter().all(|p| p.exists()));
    let back = read_run_dir(dir.path()).unwrap();
    let recs = &back[&5];
    assert_eq!(recs.len(), 5);
    assert_eq!(recs[4].episode, 4);
    assert!((recs[4].gini - out.seeds[0].records[4].gini).abs() < 1e-5);
    let p = PolicySpec::load(dir.path().join("policy_low_seed5.txt"), cfg.learner.clone()).unwrap();
    assert_eq!(p.weights, out.seeds[0].low_policy.weights);
}

#[test]
fn random_rollout_keeps_state_invariants() {
    let cfg = generate(&GeneratorParams::new(16, 50, 3)).unwrap();
    let env = TwinEnv::new(cfg).unwrap();
    let clock = MacroClock::new(10, 60).unwrap();
    let params = HierarchyParams::default();
    let actions = micro_action_count(env.speed_grid().len());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut state = env.reset(42);
    assert_eq!(state, env.reset(42));
    let mut logged = 0.0;
    for t in 0..60u32 {
        let ctx = HighLevelContext::from_state(&state, &clock, 5000.0, 0.0);
        let mut m = default_macro(&env, &state, &ctx, &params).unwrap();
        m.epoch = clock.epoch(t);
        let micro: Vec<_> = (0..env.num_vessels())
            .map(|_| decode_micro(rng.random_range(0..actions)))
            .collect();
        let before_e = state.cumulative_emissions;
        let before_c = state.cumulative_cost.clone();
        let metrics = env.step(&mut state, &micro, &m).unwrap();
        logged += metrics.emissions;
        assert!(metrics.emissions >= 0.0 && metrics.emissions <= env.emission_bound() + 1e-9);
        assert!(state.cumulative_emissions >= before_e);
        assert!((state.cumulative_emissions - logged).abs() <= 1e-9 * logged.max(1.0));
        for (a, b) in before_c.iter().zip(&state.cumulative_cost) {
            assert!(b >= a);
        }
        for (p, port) in state.ports.iter().enumerate() {
            assert!(metrics.berth_occupancy[p] <= port.berth_capacity);
            assert!(metrics.crane_occupancy[p] <= port.crane_capacity);
        }
        assert_eq!(state.t, t + 1);
    }
}

#[test]
fn shipped_configs_validate() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["desk_4x8.json", "maritime_16x50.json"] {
        let cfg = RunConfig::load(dir.join(name)).unwrap();
        cfg.validate().unwrap();
        let env = build_env(&cfg).unwrap();
        assert!(env.num_vessels() >= 8);
        let again = RunConfig::from_json(&cfg.to_json_pretty().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }
}
