//! Front-end plumbing: one-shot estimates, batch experiments, verification
//! suites and the classical plug-in baseline.

mod experiment;
mod plugin;
pub mod verify;

use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

pub use experiment::{run_experiment, write_csv, CellConfig, CsvRow, ExperimentConfig, CSV_HEADER};
pub use plugin::{classical_plugin_baseline, plugin_kl, Measure};

use crate::distinctness::{estimate_power_sum_integer, DistinctnessCostModel};
use crate::distributions::RationalDistribution;
use crate::error::{invalid, Result};
use crate::estimators::{
    estimate_kl, estimate_min_entropy, estimate_power_sum_large, estimate_power_sum_small, estimate_shannon,
    estimate_support_coverage, estimate_support_size, power_sum_tolerance, EstimateReport, EstimatorConfig,
};
use crate::instances::{generate, InstanceSpec};
use crate::mean::EstimationMode;
use crate::oracle::DistributionOracle;

/// Environment variable holding the default master seed.
pub const SEED_ENV: &str = "QENTROPY_SEED";

/// Estimator selection as exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Shannon,
    Kl,
    /// Rényi entropy with additive ε, dispatched on α.
    Renyi,
    /// Power sum with multiplicative ε, dispatched on α.
    PowerSum,
    MinEntropy,
    Coverage,
    SupportSize,
    /// Classical plug-in baseline.
    Plugin,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Shannon => "shannon",
            Algo::Kl => "kl",
            Algo::Renyi => "renyi",
            Algo::PowerSum => "power-sum",
            Algo::MinEntropy => "min-entropy",
            Algo::Coverage => "coverage",
            Algo::SupportSize => "support-size",
            Algo::Plugin => "plugin",
        }
    }
}

impl FromStr for Algo {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "shannon" => Algo::Shannon,
            "kl" => Algo::Kl,
            "renyi" => Algo::Renyi,
            "power-sum" => Algo::PowerSum,
            "min-entropy" => Algo::MinEntropy,
            "coverage" => Algo::Coverage,
            "support-size" => Algo::SupportSize,
            "plugin" => Algo::Plugin,
            other => return Err(invalid(format!("unknown algorithm '{other}'"))),
        })
    }
}

/// Read a distribution from an instance shorthand or a JSON file path.
pub fn load_distribution(text: &str, seed: u64) -> Result<RationalDistribution> {
    match text.parse::<InstanceSpec>() {
        Ok(spec) => generate(&spec, seed),
        Err(parse_err) => {
            if Path::new(text).exists() {
                RationalDistribution::load(text)
            } else {
                Err(parse_err)
            }
        }
    }
}

/// Everything one estimator trial needs.
#[derive(Debug, Clone)]
pub struct EstimateRequest {
    pub algo: Algo,
    pub p: RationalDistribution,
    pub q: Option<RationalDistribution>,
    pub alpha: Option<f64>,
    pub epsilon: f64,
    pub delta: f64,
    /// KL promise bound; defaults to the exact `max p_i/q_i`.
    pub ratio_bound: Option<f64>,
    /// Coverage sample count; defaults to `n`.
    pub n_samples: Option<u64>,
    /// Support-size probability floor `1/m`; defaults to `m = n`.
    pub m: Option<u64>,
    /// Plug-in baseline measure.
    pub measure: Option<Measure>,
    pub mode: EstimationMode,
    pub cost_model: Option<DistinctnessCostModel>,
    pub seed: u64,
}

impl EstimateRequest {
    pub fn new(algo: Algo, p: RationalDistribution, epsilon: f64, seed: u64) -> Self {
        Self {
            algo,
            p,
            q: None,
            alpha: None,
            epsilon,
            delta: 0.1,
            ratio_bound: None,
            n_samples: None,
            m: None,
            measure: None,
            mode: EstimationMode::Contract,
            cost_model: None,
            seed,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    fn config(&self, epsilon: f64) -> EstimatorConfig {
        let mut cfg = EstimatorConfig::new(epsilon, mix(self.seed, 1)).with_delta(self.delta).with_mode(self.mode);
        cfg.cost_model = self.cost_model;
        cfg
    }

    fn alpha(&self) -> Result<f64> {
        self.alpha.ok_or_else(|| invalid(format!("{} needs --alpha", self.algo.name())))
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Seed of trial `trial` in cell `cell` under `master`.
pub fn trial_seed(master: u64, cell: usize, trial: usize) -> u64 {
    mix(mix(master, cell as u64), trial as u64)
}

fn is_integer(alpha: f64) -> bool {
    alpha.fract() == 0.0 && alpha.is_finite()
}

/// Run one estimator trial.
pub fn run_estimate(req: &EstimateRequest) -> Result<EstimateReport> {
    let mut p = DistributionOracle::build(&req.p, mix(req.seed, 2)).with_label("p");
    match req.algo {
        Algo::Shannon => estimate_shannon(&mut p, &req.config(req.epsilon)),
        Algo::Kl => {
            let q_dist = req.q.as_ref().ok_or_else(|| invalid("kl needs a second distribution --q"))?;
            let mut q = DistributionOracle::build(q_dist, mix(req.seed, 3)).with_label("q");
            let f = match req.ratio_bound {
                Some(f) => f,
                None => req.p.max_ratio(q_dist)?.max(1.0),
            };
            estimate_kl(&mut p, &mut q, f, &req.config(req.epsilon))
        }
        Algo::Renyi => {
            let alpha = req.alpha()?;
            if alpha == 1.0 {
                return estimate_shannon(&mut p, &req.config(req.epsilon));
            }
            if alpha == f64::INFINITY {
                let tol = -(-req.epsilon).exp_m1();
                let r = estimate_min_entropy(&mut p, &req.config(tol))?;
                return Ok(r.into_entropy_report(req.epsilon));
            }
            let mut tol = power_sum_tolerance(alpha, req.epsilon);
            if alpha > 1.0 && !is_integer(alpha) {
                tol = tol.min(0.25);
            }
            let r = power_sum(&mut p, alpha, &req.config(tol))?;
            Ok(r.into_entropy_report(req.epsilon))
        }
        Algo::PowerSum => power_sum(&mut p, req.alpha()?, &req.config(req.epsilon)),
        Algo::MinEntropy => estimate_min_entropy(&mut p, &req.config(req.epsilon)),
        Algo::Coverage => {
            let n_samples = req.n_samples.unwrap_or(req.p.n() as u64);
            estimate_support_coverage(&mut p, n_samples, &req.config(req.epsilon))
        }
        Algo::SupportSize => {
            let m = req.m.unwrap_or(req.p.n() as u64);
            estimate_support_size(&mut p, m, &req.config(req.epsilon))
        }
        Algo::Plugin => {
            let measure = req.measure.ok_or_else(|| invalid("plugin needs --measure"))?;
            let n_samples = req.n_samples.unwrap_or(1000);
            let mut rng = crate::rng(mix(req.seed, 1));
            if measure == Measure::Kl {
                let q_dist = req.q.as_ref().ok_or_else(|| invalid("kl needs a second distribution --q"))?;
                let mut q = DistributionOracle::build(q_dist, mix(req.seed, 3)).with_label("q");
                return plugin_kl(&mut p, &mut q, n_samples, req.epsilon, &mut rng);
            }
            classical_plugin_baseline(&mut p, measure, n_samples, req.epsilon, &mut rng)
        }
    }
}

fn power_sum(oracle: &mut DistributionOracle, alpha: f64, cfg: &EstimatorConfig) -> Result<EstimateReport> {
    if alpha >= 2.0 && is_integer(alpha) {
        estimate_power_sum_integer(oracle, alpha as u32, cfg)
    } else if alpha > 1.0 {
        estimate_power_sum_large(oracle, alpha, cfg)
    } else if alpha > 0.0 && alpha < 1.0 {
        estimate_power_sum_small(oracle, alpha, cfg)
    } else {
        Err(invalid(format!("no power-sum estimator for alpha = {alpha}")))
    }
}
