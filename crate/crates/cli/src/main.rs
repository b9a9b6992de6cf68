use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ecofair_core::env::generator::{generate, GeneratorParams};
use ecofair_core::harness::{
    aggregate_dir, plot_data_dir, run_experiment, scale_probe, verify_regret, write_outcome,
    RegretKind, RunConfig,
};
use ecofair_core::learner::BaselineMode;
use ecofair_core::Error;

/// Exit code for a broken simulator or learner invariant.
const EXIT_INVARIANT: u8 = 3;
/// Exit code for a check that ran but did not meet its threshold.
const EXIT_CHECK_FAILED: u8 = 2;

#[derive(Parser)]
#[command(name = "ecofair", version, about = "Carbon-capped, fairness-aware fleet learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a run config and write CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seeds; repeatable.
        #[arg(long = "seed")]
        seeds: Vec<u64>,
        #[arg(long)]
        mode: Option<BaselineMode>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a synthetic regret fixture and report the log-log slope.
    VerifyRegret {
        #[arg(long)]
        kind: RegretKind,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Summarise the episode CSVs of a run directory.
    Aggregate {
        #[arg(long = "in")]
        dir: PathBuf,
    },
    /// Time training episodes over several fleet sizes.
    ScaleProbe {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "10,20,40,80")]
        agents: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        min_episodes: usize,
        #[arg(long, default_value_t = 1.0)]
        min_seconds: f64,
    },
    /// Write per-episode cross-seed means for plotting.
    PlotData {
        #[arg(long = "in")]
        dir: PathBuf,
    },
    /// Write a generated environment config.
    GenerateEnv {
        #[arg(long)]
        ports: usize,
        #[arg(long)]
        vessels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(config: &Path, seeds: Vec<u64>, mode: Option<BaselineMode>, out: Option<PathBuf>) -> Result<u8, Error> {
    let mut cfg = RunConfig::load(config)?;
    if !seeds.is_empty() {
        cfg.seeds = seeds;
    }
    if let Some(m) = mode {
        cfg.mode = m;
    }
    let dir = out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(cfg.mode.name()));
    cfg.output_dir = Some(dir.clone());
    let outcome = run_experiment(&cfg)?;
    let written = write_outcome(&outcome, &dir)?;
    println!("mode {} budget {:.4} t CO2e", outcome.mode, outcome.budget);
    for s in &outcome.seeds {
        let last = s.records.last().expect("at least one episode");
        println!(
            "seed {}: final E_T {:.3} excess {:.3} gini {:.4} minmax {:.4} return {:.2} lambda {:.4} beta {:.4}",
            s.seed,
            last.emissions_total,
            last.violation_excess,
            last.gini,
            last.minmax,
            last.total_return,
            last.lambda_final,
            last.beta_final
        );
    }
    println!("wrote {} files to {}", written.len(), dir.display());
    let violations = outcome.capacity_violations();
    if violations > 0 {
        eprintln!("capacity violated {violations} times after resolution");
        return Ok(EXIT_INVARIANT);
    }
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run {
            config,
            seeds,
            mode,
            out,
        } => run(&config, seeds, mode, out),
        Command::VerifyRegret { kind, steps, seed } => {
            let r = verify_regret(kind, steps, seed)?;
            let slope = r.slope.map_or("n/a (zero regret)".to_string(), |s| format!("{s:.4}"));
            println!(
                "{:?}: steps {} slope {} threshold {} cumulative regret {:.4}",
                r.kind, r.steps, slope, r.threshold, r.cumulative_regret
            );
            if let (Some(m), Some(l)) = (r.tail_mean, r.tail_limit) {
                println!("tail mean emissions {m:.4} limit {l:.4}");
            }
            println!("{}", if r.pass { "PASS" } else { "FAIL" });
            Ok(if r.pass { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::Aggregate { dir } => {
            let (path, rows) = aggregate_dir(&dir)?;
            println!("metric,mean_over_episodes,std_over_episodes,final_mean,final_std");
            for r in rows {
                println!(
                    "{},{},{},{},{}",
                    r.metric, r.mean_over_episodes, r.std_over_episodes, r.final_mean, r.final_std
                );
            }
            println!("wrote {}", path.display());
            Ok(0)
        }
        Command::ScaleProbe {
            config,
            agents,
            min_episodes,
            min_seconds,
        } => {
            let cfg = RunConfig::load(&config)?;
            let r = scale_probe(&cfg, &agents, min_episodes, min_seconds)?;
            println!("agents,episodes,seconds_per_episode");
            for p in &r.points {
                println!("{},{},{:.6}", p.agents, p.episodes, p.seconds_per_episode);
            }
            match r.exponent {
                Some(e) => println!("exponent {e:.4} ({})", if r.pass { "PASS" } else { "FAIL" }),
                None => println!("exponent n/a"),
            }
            Ok(if r.pass { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::PlotData { dir } => {
            println!("wrote {}", plot_data_dir(&dir)?.display());
            Ok(0)
        }
        Command::GenerateEnv {
            ports,
            vessels,
            seed,
            out,
        } => {
            let cfg = generate(&GeneratorParams::new(ports, vessels, seed))?;
            std::fs::write(&out, cfg.to_json_pretty()? + "\n").map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            println!("wrote {}", out.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Invariant(_) | Error::NonFiniteGradient(_) => EXIT_INVARIANT,
                _ => 1,
            })
        }
    }
}
