//! Single-trial estimators built from the oracle, amplitude estimation and
//! mean estimation. Each estimator owns its generator (seeded from the
//! config) and reports against the exact value.

mod coverage;
mod kl;
mod min_entropy;
mod renyi;
mod shannon;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use coverage::{estimate_support_coverage, estimate_support_size};
pub use kl::estimate_kl;
pub use min_entropy::estimate_min_entropy;
pub use renyi::{
    annealing_schedule, estimate_power_sum_large, estimate_power_sum_small, median_amplify,
    median_repetitions, LevelTrace,
};
pub use shannon::{estimate_shannon, shannon_budget};

use crate::distinctness::DistinctnessCostModel;
use crate::error::{invalid, Result};
use crate::mean::{EstimationMode, MeanConfig};
use crate::oracle::{DistributionOracle, QueryLedger};

/// Hidden constants of the estimators, with calibrated defaults.
#[derive(Debug, Clone, Serialize)]
pub struct Constants {
    pub mean: MeanConfig,
    /// Multiplier on the Shannon amplitude-estimation budget.
    pub shannon_budget_scale: u64,
    /// Multiplier on both KL budgets.
    pub kl_budget_scale: u64,
    /// Multiplier on the non-integer Rényi budgets.
    pub renyi_budget_scale: u64,
    /// Multiplier on the coverage budget.
    pub coverage_budget_scale: u64,
    /// `K` in the `⌈K/ε²⌉` sequence count of the collision estimator.
    pub collision_repetitions: f64,
    /// Observed `Var[C]` above this is flagged.
    pub collision_variance_limit: f64,
    /// `48` in the `⌈48 ln(1/δ)⌉` median count.
    pub median_factor: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            mean: MeanConfig::default(),
            shannon_budget_scale: 4,
            kl_budget_scale: 4,
            renyi_budget_scale: 4,
            coverage_budget_scale: 1,
            collision_repetitions: 16.0,
            collision_variance_limit: 50.0,
            median_factor: 48.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorConfig {
    /// Additive for entropies, multiplicative for power sums.
    pub epsilon: f64,
    pub delta: f64,
    pub constants: Constants,
    pub mode: EstimationMode,
    pub seed: u64,
    /// Distinctness cost model; `None` picks the algorithm's default.
    pub cost_model: Option<DistinctnessCostModel>,
}

impl EstimatorConfig {
    pub fn new(epsilon: f64, seed: u64) -> Self {
        Self {
            epsilon,
            delta: 0.1,
            constants: Constants::default(),
            mode: EstimationMode::Contract,
            seed,
            cost_model: None,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_mode(mut self, mode: EstimationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_cost_model(mut self, cost: DistinctnessCostModel) -> Self {
        self.cost_model = Some(cost);
        self
    }

    pub(crate) fn check_epsilon(&self, max: f64) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= max) {
            return Err(invalid(format!("epsilon must lie in (0, {max}], got {}", self.epsilon)));
        }
        Ok(())
    }

    pub(crate) fn check_delta(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMode {
    Additive,
    Multiplicative,
}

impl ErrorMode {
    pub fn label(self) -> &'static str {
        match self {
            ErrorMode::Additive => "additive",
            ErrorMode::Multiplicative => "multiplicative",
        }
    }
}

/// Outcome of one estimator trial.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub algo: String,
    pub alpha: Option<f64>,
    pub estimate: f64,
    pub truth: f64,
    pub error_mode: ErrorMode,
    pub epsilon: f64,
    /// `|estimate − truth|`, divided by `truth` in multiplicative mode.
    pub error: f64,
    pub success: bool,
    /// Ledgers keyed by oracle label.
    pub ledgers: BTreeMap<String, QueryLedger>,
    /// α levels (Rényi), λ values (min-entropy) or sequence lengths (collisions).
    pub schedule: Vec<f64>,
    pub levels: Vec<LevelTrace>,
    pub entropy_estimate: Option<f64>,
    pub entropy_truth: Option<f64>,
    pub in_contract: bool,
    pub flags: Vec<String>,
    pub extras: BTreeMap<String, f64>,
}

impl EstimateReport {
    pub fn new(algo: &str, estimate: f64, truth: f64, error_mode: ErrorMode, epsilon: f64) -> Self {
        let (error, success) = score(estimate, truth, error_mode, epsilon);
        Self {
            algo: algo.to_string(),
            alpha: None,
            estimate,
            truth,
            error_mode,
            epsilon,
            error,
            success,
            ledgers: BTreeMap::new(),
            schedule: Vec::new(),
            levels: Vec::new(),
            entropy_estimate: None,
            entropy_truth: None,
            in_contract: true,
            flags: Vec::new(),
            extras: BTreeMap::new(),
        }
    }

    pub fn flag(&mut self, name: &str) {
        if !self.flags.iter().any(|f| f == name) {
            self.flags.push(name.to_string());
        }
    }

    pub fn attach_ledger(&mut self, oracle: &mut DistributionOracle) {
        let label = oracle.label().to_string();
        self.ledgers.insert(label, oracle.take_ledger());
    }

    /// Derived Rényi entropy from a power-sum estimate.
    pub(crate) fn set_entropy(&mut self, alpha: f64) {
        self.entropy_estimate = Some(self.estimate.ln() / (1.0 - alpha));
        self.entropy_truth = Some(self.truth.ln() / (1.0 - alpha));
    }

    pub fn quantum_queries(&self, label: &str) -> u64 {
        self.ledgers.get(label).map_or(0, |l| l.quantum_queries())
    }

    pub fn total_quantum_queries(&self) -> u64 {
        self.ledgers.values().map(|l| l.quantum_queries()).sum()
    }

    pub fn classical_executions(&self) -> u64 {
        self.ledgers.values().map(|l| l.classical_executions()).sum()
    }

    /// Re-score as an additive estimate of the derived entropy with tolerance `eps`.
    pub fn into_entropy_report(mut self, eps: f64) -> Self {
        let (est, truth) = match (self.entropy_estimate, self.entropy_truth) {
            (Some(e), Some(t)) => (e, t),
            _ => return self,
        };
        self.algo = "renyi".to_string();
        self.extras.insert("power_sum_estimate".into(), self.estimate);
        self.extras.insert("power_sum_truth".into(), self.truth);
        self.estimate = est;
        self.truth = truth;
        self.error_mode = ErrorMode::Additive;
        self.epsilon = eps;
        let (error, success) = score(est, truth, ErrorMode::Additive, eps);
        self.error = error;
        self.success = success;
        self
    }

    pub fn to_json(&self) -> serde_json::Value {
        let ledgers: BTreeMap<&str, serde_json::Value> =
            self.ledgers.iter().map(|(k, v)| (k.as_str(), v.to_json())).collect();
        serde_json::json!({
            "algo": self.algo,
            "alpha": self.alpha,
            "estimate": self.estimate,
            "truth": self.truth,
            "error_mode": self.error_mode,
            "epsilon": self.epsilon,
            "error": self.error,
            "success": self.success,
            "entropy_estimate": self.entropy_estimate,
            "entropy_truth": self.entropy_truth,
            "in_contract": self.in_contract,
            "flags": self.flags,
            "schedule": self.schedule,
            "levels": self.levels,
            "extras": self.extras,
            "ledger": ledgers,
        })
    }
}

fn score(estimate: f64, truth: f64, mode: ErrorMode, eps: f64) -> (f64, bool) {
    let abs = (estimate - truth).abs();
    let err = match mode {
        ErrorMode::Additive => abs,
        ErrorMode::Multiplicative => abs / truth.abs(),
    };
    // NaN compares false, so undefined estimates never succeed
    (err, err <= eps)
}

/// Multiplicative tolerance on `P_α` that yields additive `ε` on `H_α`.
pub fn power_sum_tolerance(alpha: f64, entropy_eps: f64) -> f64 {
    -(-(alpha - 1.0).abs() * entropy_eps).exp_m1()
}
