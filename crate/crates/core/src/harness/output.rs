//! Per-episode records and their CSV form.
//!
//! Floats are written `%g`-style with six significant digits so repeat runs
//! produce byte-identical files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub seed: u64,
    /// Sum of raw rewards over agents and steps.
    pub total_return: f64,
    /// `E_T`.
    pub emissions_total: f64,
    /// `B`.
    pub cap: f64,
    /// `(E_T - B)+`.
    pub violation_excess: f64,
    pub gini: f64,
    pub minmax: f64,
    /// Voyages completed.
    pub throughput: f64,
    pub waiting_hours: f64,
    pub lambda_final: f64,
    pub beta_final: f64,
    pub max_mu: f64,
    pub max_nu: f64,
    /// Sum of rewards after pricing and the fairness penalty.
    pub shaped_return: f64,
    /// Sum of rewards after pricing, before the fairness penalty.
    pub priced_return: f64,
}

pub const EPISODE_COLUMNS: [&str; 16] = [
    "episode",
    "seed",
    "total_return",
    "emissions_total",
    "cap",
    "violation_excess",
    "gini",
    "minmax",
    "throughput",
    "waiting_hours",
    "lambda_final",
    "beta_final",
    "max_mu",
    "max_nu",
    "shaped_return",
    "priced_return",
];

/// Metric columns (everything but the episode and seed keys).
pub fn metric_columns() -> &'static [&'static str] {
    &EPISODE_COLUMNS[2..]
}

impl EpisodeRecord {
    pub fn metrics(&self) -> [f64; 14] {
        [
            self.total_return,
            self.emissions_total,
            self.cap,
            self.violation_excess,
            self.gini,
            self.minmax,
            self.throughput,
            self.waiting_hours,
            self.lambda_final,
            self.beta_final,
            self.max_mu,
            self.max_nu,
            self.shaped_return,
            self.priced_return,
        ]
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        metric_columns()
            .iter()
            .position(|c| *c == name)
            .map(|i| self.metrics()[i])
    }

    fn from_row(row: &[f64]) -> Self {
        Self {
            episode: row[0] as usize,
            seed: row[1] as u64,
            total_return: row[2],
            emissions_total: row[3],
            cap: row[4],
            violation_excess: row[5],
            gini: row[6],
            minmax: row[7],
            throughput: row[8],
            waiting_hours: row[9],
            lambda_final: row[10],
            beta_final: row[11],
            max_mu: row[12],
            max_nu: row[13],
            shaped_return: row[14],
            priced_return: row[15],
        }
    }
}

/// C `%g` with six significant digits.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

/// Writes a header plus rows of preformatted cells.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_episodes(path: &Path, records: &[EpisodeRecord]) -> Result<()> {
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let mut row = vec![r.episode.to_string(), r.seed.to_string()];
            row.extend(r.metrics().iter().map(|&x| fmt_g(x)));
            row
        })
        .collect();
    write_rows(path, &EPISODE_COLUMNS, &rows)
}

pub fn read_episodes(path: &Path) -> Result<Vec<EpisodeRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(EPISODE_COLUMNS.iter().copied()) {
        return Err(Error::Ragged(format!(
            "{} does not have the episode columns",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|c| {
                c.parse::<f64>().map_err(|_| {
                    Error::Ragged(format!("{}: bad number {c:?}", path.display()))
                })
            })
            .collect::<Result<_>>()?;
        out.push(EpisodeRecord::from_row(&vals));
    }
    Ok(out)
}

pub fn episodes_file(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("episodes_seed{seed}.csv"))
}

pub fn macro_file(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("macro_seed{seed}.csv"))
}

/// Reads every `episodes_seed*.csv` in `dir`, keyed by seed.
pub fn read_run_dir(dir: &Path) -> Result<BTreeMap<u64, Vec<EpisodeRecord>>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(seed) = name
            .strip_prefix("episodes_seed")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<u64>().ok())
        else {
            continue;
        };
        out.insert(seed, read_episodes(&entry.path())?);
    }
    if out.is_empty() {
        return Err(Error::Ragged(format!(
            "no episodes_seed*.csv files in {}",
            dir.display()
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroRow {
    pub episode: usize,
    pub epoch: usize,
    pub vessel: usize,
    pub route_rank: usize,
    pub window_offset: i32,
    pub target_step: i64,
    pub envelope: f64,
}

pub const MACRO_COLUMNS: [&str; 7] = [
    "episode",
    "epoch",
    "vessel",
    "route_rank",
    "window_offset",
    "target_step",
    "envelope",
];

pub fn write_macro_rows(path: &Path, rows: &[MacroRow]) -> Result<()> {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.episode.to_string(),
                r.epoch.to_string(),
                r.vessel.to_string(),
                r.route_rank.to_string(),
                r.window_offset.to_string(),
                r.target_step.to_string(),
                fmt_g(r.envelope),
            ]
        })
        .collect();
    write_rows(path, &MACRO_COLUMNS, &cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printf_g_formatting() {
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(-2.5), "-2.5");
        assert_eq!(fmt_g(123456.0), "123456");
        assert_eq!(fmt_g(1234567.0), "1.23457e+06");
        assert_eq!(fmt_g(0.0001), "0.0001");
        assert_eq!(fmt_g(0.00001234), "1.234e-05");
        assert_eq!(fmt_g(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_g(999999.5), "1e+06");
        assert_eq!(fmt_g(99.99999), "100");
        assert_eq!(fmt_g(1e100), "1e+100");
    }

    #[test]
    fn episode_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rec = EpisodeRecord {
            episode: 3,
            seed: 7,
            total_return: -1234.5,
            emissions_total: 88.0,
            cap: 80.0,
            violation_excess: 8.0,
            gini: 0.125,
            minmax: 0.5,
            throughput: 4.0,
            waiting_hours: 2.0,
            lambda_final: 0.25,
            beta_final: 1.5,
            max_mu: 0.0,
            max_nu: 0.0,
            shaped_return: -1500.0,
            priced_return: -1400.0,
        };
        let path = episodes_file(dir.path(), 7);
        write_episodes(&path, std::slice::from_ref(&rec)).unwrap();
        let back = read_run_dir(dir.path()).unwrap();
        assert_eq!(back[&7], vec![rec]);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("episode,seed,total_return,"));
    }
}
