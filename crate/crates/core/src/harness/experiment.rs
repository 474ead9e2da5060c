use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distinctness::DistinctnessCostModel;
use crate::error::{invalid, Result};
use crate::mean::EstimationMode;

use super::{load_distribution, run_estimate, trial_seed, Algo, EstimateRequest, Measure};

pub const CSV_HEADER: [&str; 16] = [
    "algo",
    "alpha",
    "n",
    "S",
    "eps",
    "delta",
    "seed",
    "estimate",
    "truth",
    "error_mode",
    "abs_or_rel_err",
    "success",
    "q_queries_p",
    "q_queries_q",
    "classical_execs",
    "wall_ms",
];

fn default_trials() -> usize {
    1
}

fn default_delta() -> Vec<f64> {
    vec![0.1]
}

fn default_mode() -> EstimationMode {
    EstimationMode::Contract
}

/// Batch of estimator cells. Loaded from JSON.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Falls back to the seed environment variable, then 0.
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_mode")]
    pub mode: EstimationMode,
    /// Record wall-clock milliseconds; off keeps reruns byte-identical.
    #[serde(default)]
    pub timing: bool,
    pub cells: Vec<CellConfig>,
}

/// A parameter grid; the cartesian product `n × eps × alpha × delta` expands
/// into cells, in that nesting order.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub algo: String,
    /// Instance shorthand or file path; `{n}` is replaced by each grid `n`.
    pub dist: String,
    #[serde(default)]
    pub q: Option<String>,
    #[serde(default)]
    pub n: Vec<usize>,
    pub eps: Vec<f64>,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: Vec<f64>,
    /// KL promise bound.
    #[serde(default)]
    pub f: Option<f64>,
    #[serde(default)]
    pub n_samples: Option<u64>,
    #[serde(default)]
    pub m: Option<u64>,
    #[serde(default)]
    pub measure: Option<String>,
    #[serde(default)]
    pub cost_model: Option<String>,
    /// Overrides the experiment-wide trial count.
    #[serde(default)]
    pub trials: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub algo: String,
    pub alpha: Option<f64>,
    pub n: usize,
    #[serde(rename = "S")]
    pub total: u64,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    pub estimate: f64,
    pub truth: f64,
    pub error_mode: &'static str,
    pub abs_or_rel_err: f64,
    pub success: bool,
    pub q_queries_p: u64,
    pub q_queries_q: u64,
    pub classical_execs: u64,
    pub wall_ms: u64,
}

struct Cell {
    request: EstimateRequest,
    trials: usize,
}

fn expand(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    for (idx, c) in cfg.cells.iter().enumerate() {
        let algo: Algo = c.algo.parse()?;
        if c.eps.is_empty() {
            return Err(invalid(format!("cell {idx} has an empty eps grid")));
        }
        let ns: Vec<Option<usize>> = if c.n.is_empty() { vec![None] } else { c.n.iter().map(|&n| Some(n)).collect() };
        let alphas: Vec<Option<f64>> =
            if c.alpha.is_empty() { vec![None] } else { c.alpha.iter().map(|&a| Some(a)).collect() };
        let cost_model = c.cost_model.as_deref().map(DistinctnessCostModel::parse).transpose()?;
        let measure = c.measure.as_deref().map(str::parse::<Measure>).transpose()?;
        for &n in &ns {
            let fill = |text: &str| match n {
                Some(n) => text.replace("{n}", &n.to_string()),
                None => text.to_string(),
            };
            let p = load_distribution(&fill(&c.dist), 0)?;
            let q = c.q.as_deref().map(|t| load_distribution(&fill(t), 0)).transpose()?;
            for &eps in &c.eps {
                for &alpha in &alphas {
                    for &delta in &c.delta {
                        let mut request = EstimateRequest::new(algo, p.clone(), eps, 0);
                        request.q = q.clone();
                        request.alpha = alpha;
                        request.delta = delta;
                        request.ratio_bound = c.f;
                        request.n_samples = c.n_samples;
                        request.m = c.m;
                        request.measure = measure;
                        request.mode = cfg.mode;
                        request.cost_model = cost_model;
                        cells.push(Cell { request, trials: c.trials.unwrap_or(cfg.trials) });
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn run_one(cell: &Cell, seed: u64, timing: bool) -> Result<CsvRow> {
    let mut request = cell.request.clone();
    request.seed = seed;
    let start = Instant::now();
    let report = run_estimate(&request)?;
    let wall_ms = if timing { start.elapsed().as_millis() as u64 } else { 0 };
    Ok(CsvRow {
        algo: report.algo.clone(),
        alpha: request.alpha,
        n: request.p.n(),
        total: request.p.total(),
        eps: request.epsilon,
        delta: request.delta,
        seed,
        estimate: report.estimate,
        truth: report.truth,
        error_mode: report.error_mode.label(),
        abs_or_rel_err: report.error,
        success: report.success,
        q_queries_p: report.quantum_queries("p"),
        q_queries_q: report.quantum_queries("q"),
        classical_execs: report.classical_executions(),
        wall_ms,
    })
}

/// Run every trial of every cell; rows come back in cell-then-trial order
/// whatever order the trials finish in.
pub fn run_experiment(cfg: &ExperimentConfig, master_seed: u64) -> Result<Vec<CsvRow>> {
    let cells = expand(cfg)?;
    let tasks: Vec<(usize, usize)> =
        cells.iter().enumerate().flat_map(|(c, cell)| (0..cell.trials).map(move |t| (c, t))).collect();
    tasks
        .par_iter()
        .map(|&(c, t)| run_one(&cells[c], trial_seed(master_seed, c, t), cfg.timing))
        .collect()
}

pub fn write_csv<W: Write>(rows: &[CsvRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    if rows.is_empty() {
        writer.write_record(CSV_HEADER)?;
    }
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"{
        "master_seed": 11,
        "trials": 2,
        "cells": [
            {"algo": "shannon", "dist": "uniform:{n}", "n": [4, 8], "eps": [0.5]},
            {"algo": "plugin", "dist": "point:3", "eps": [0.1], "measure": "shannon", "n_samples": 10}
        ]
    }"#;

    #[test]
    fn rows_follow_cells_then_trials() {
        let cfg = ExperimentConfig::from_json(CONFIG).unwrap();
        let rows = run_experiment(&cfg, 11).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].n, 4);
        assert_eq!(rows[2].n, 8);
        assert_eq!(rows[5].algo, "plugin");
        assert_eq!(rows[0].seed, trial_seed(11, 0, 0));
        assert_eq!(rows[1].seed, trial_seed(11, 0, 1));
    }

    #[test]
    fn csv_header_matches_schema() {
        let cfg = ExperimentConfig::from_json(CONFIG).unwrap();
        let rows = run_experiment(&cfg, 11).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        let mut empty = Vec::new();
        write_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim(), CSV_HEADER.join(","));
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"cells": [], "bogus": 1}"#).is_err());
    }
}
