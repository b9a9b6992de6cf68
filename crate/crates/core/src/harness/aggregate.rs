//! Cross-seed summaries of episode records.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::output::{fmt_g, metric_columns, read_run_dir, write_rows, EpisodeRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub metric: &'static str,
    /// Per-seed mean over episodes, then mean and population std over seeds.
    pub mean_over_episodes: f64,
    pub std_over_episodes: f64,
    /// Final-episode value, mean and population std over seeds.
    pub final_mean: f64,
    pub final_std: f64,
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn check_rectangular(runs: &BTreeMap<u64, Vec<EpisodeRecord>>) -> Result<usize> {
    let mut lens = runs.iter().map(|(s, r)| (s, r.len()));
    let Some((_, len)) = lens.next() else {
        return Err(Error::Ragged("no seeds to aggregate".into()));
    };
    if len == 0 {
        return Err(Error::Ragged("seed with no episodes".into()));
    }
    if let Some((seed, other)) = lens.find(|(_, l)| *l != len) {
        return Err(Error::Ragged(format!(
            "seed {seed} has {other} episodes, expected {len}"
        )));
    }
    Ok(len)
}

pub fn aggregate(runs: &BTreeMap<u64, Vec<EpisodeRecord>>) -> Result<Vec<MetricSummary>> {
    check_rectangular(runs)?;
    Ok(metric_columns()
        .iter()
        .enumerate()
        .map(|(m, &metric)| {
            let per_seed: Vec<f64> = runs
                .values()
                .map(|r| r.iter().map(|e| e.metrics()[m]).sum::<f64>() / r.len() as f64)
                .collect();
            let finals: Vec<f64> = runs
                .values()
                .map(|r| r.last().expect("non-empty").metrics()[m])
                .collect();
            let (mean_over_episodes, std_over_episodes) = mean_std(&per_seed);
            let (final_mean, final_std) = mean_std(&finals);
            MetricSummary {
                metric,
                mean_over_episodes,
                std_over_episodes,
                final_mean,
                final_std,
            }
        })
        .collect())
}

pub fn write_aggregate(path: &Path, rows: &[MetricSummary]) -> Result<()> {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.metric.to_string(),
                fmt_g(r.mean_over_episodes),
                fmt_g(r.std_over_episodes),
                fmt_g(r.final_mean),
                fmt_g(r.final_std),
            ]
        })
        .collect();
    write_rows(
        path,
        &["metric", "mean_over_episodes", "std_over_episodes", "final_mean", "final_std"],
        &cells,
    )
}

/// Columns of the plot table, each averaged across seeds per episode.
pub const PLOT_METRICS: [&str; 9] = [
    "gini",
    "minmax",
    "emissions_total",
    "cap",
    "violation_excess",
    "total_return",
    "throughput",
    "lambda_final",
    "beta_final",
];

/// Per-episode means across seeds of [`PLOT_METRICS`].
pub fn plot_data(runs: &BTreeMap<u64, Vec<EpisodeRecord>>) -> Result<Vec<Vec<f64>>> {
    let len = check_rectangular(runs)?;
    Ok((0..len)
        .map(|ep| {
            let mut row = vec![ep as f64];
            for m in PLOT_METRICS {
                let vals: Vec<f64> = runs
                    .values()
                    .map(|r| r[ep].metric(m).expect("known metric"))
                    .collect();
                row.push(mean_std(&vals).0);
            }
            row
        })
        .collect())
}

pub fn write_plot_data(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut header = vec!["episode"];
    header.extend(PLOT_METRICS);
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut c = vec![(r[0] as usize).to_string()];
            c.extend(r[1..].iter().map(|&x| fmt_g(x)));
            c
        })
        .collect();
    write_rows(path, &header, &cells)
}

/// Reads a run directory and writes `aggregate.csv` into it.
pub fn aggregate_dir(dir: &Path) -> Result<(PathBuf, Vec<MetricSummary>)> {
    let runs = read_run_dir(dir)?;
    let rows = aggregate(&runs)?;
    let path = dir.join("aggregate.csv");
    write_aggregate(&path, &rows)?;
    Ok((path, rows))
}

/// Reads a run directory and writes `plot_data.csv` into it.
pub fn plot_data_dir(dir: &Path) -> Result<PathBuf> {
    let runs = read_run_dir(dir)?;
    let path = dir.join("plot_data.csv");
    write_plot_data(&path, &plot_data(&runs)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(episode: usize, seed: u64, gini: f64) -> EpisodeRecord {
        EpisodeRecord {
            episode,
            seed,
            total_return: -10.0,
            emissions_total: 5.0,
            cap: 4.0,
            violation_excess: 1.0,
            gini,
            minmax: 0.5,
            throughput: 1.0,
            waiting_hours: 0.0,
            lambda_final: 0.0,
            beta_final: 0.0,
            max_mu: 0.0,
            max_nu: 0.0,
            shaped_return: -10.0,
            priced_return: -10.0,
        }
    }

    #[test]
    fn population_std_over_seeds() {
        let mut runs = BTreeMap::new();
        runs.insert(1, vec![rec(0, 1, 0.1), rec(1, 1, 0.3)]);
        runs.insert(2, vec![rec(0, 2, 0.3), rec(1, 2, 0.5)]);
        let rows = aggregate(&runs).unwrap();
        let g = rows.iter().find(|r| r.metric == "gini").unwrap();
        assert!((g.mean_over_episodes - 0.3).abs() < 1e-12);
        assert!((g.std_over_episodes - 0.1).abs() < 1e-12);
        assert!((g.final_mean - 0.4).abs() < 1e-12);
        assert!((g.final_std - 0.1).abs() < 1e-12);
        let pd = plot_data(&runs).unwrap();
        assert_eq!(pd.len(), 2);
        assert!((pd[1][1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn ragged_runs_rejected() {
        let mut runs = BTreeMap::new();
        runs.insert(1, vec![rec(0, 1, 0.1), rec(1, 1, 0.3)]);
        runs.insert(2, vec![rec(0, 2, 0.3)]);
        assert!(matches!(aggregate(&runs), Err(Error::Ragged(_))));
    }
}
