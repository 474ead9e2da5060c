use crate::distinctness::{k_distinctness, DistinctnessCostModel};
use crate::error::Result;
use crate::oracle::DistributionOracle;
use crate::poisson::{min_entropy_threshold, sample_poisson};
use crate::quantum::estamp_multiplicative;

use super::{EstimateReport, EstimatorConfig, ErrorMode};

/// Multiplicative-ε estimate of `max_i p_i` by Poissonized collision search;
/// the derived min-entropy is `−ln` of the estimate.
pub fn estimate_min_entropy(oracle: &mut DistributionOracle, cfg: &EstimatorConfig) -> Result<EstimateReport> {
    cfg.check_epsilon(1.0)?;
    let mut rng = crate::rng(cfg.seed);
    let n = oracle.n();
    let eps = cfg.epsilon;
    let truth = oracle.source().max_probability();
    let cost = cfg.cost_model.unwrap_or(DistinctnessCostModel::flat34());

    let mut lambdas = Vec::new();
    let mut found = None;
    let mut budget = 0u64;
    let estimate = if n == 1 {
        1.0
    } else {
        let threshold = min_entropy_threshold(n, eps);
        let k = (threshold.ceil() as u32).max(2);
        let fail = eps / (2.0 * (n as f64).ln());
        let growth = (1.0 + eps).sqrt();
        let mut lambda = 1.0;
        let mut result = None;
        while lambda <= n as f64 {
            lambdas.push(lambda);
            let count = sample_poisson(lambda * threshold, &mut rng)?;
            let seq: Vec<usize> = (0..count).map(|_| oracle.sample(&mut rng)).collect();
            if let Some(i) = k_distinctness(&seq, k, fail, &cost, oracle.ledger_mut(), &mut rng) {
                let (value, m) = estamp_multiplicative(oracle, i, eps, 1.0 / n as f64, &mut rng)?;
                found = Some(i);
                budget = m;
                result = Some(value);
                break;
            }
            lambda *= growth;
        }
        result.unwrap_or(1.0 / n as f64)
    };

    let mut report = EstimateReport::new("min-entropy", estimate, truth, ErrorMode::Multiplicative, eps);
    report.alpha = Some(f64::INFINITY);
    report.entropy_estimate = Some(-estimate.ln());
    report.entropy_truth = Some(-truth.ln());
    report.extras.insert("rounds".into(), lambdas.len() as f64);
    report.extras.insert("collision_order".into(), min_entropy_threshold(n, eps).ceil());
    report.extras.insert("counting_budget".into(), budget as f64);
    if let Some(i) = found {
        report.extras.insert("element".into(), i as f64);
    } else if n > 1 {
        report.flag("fallback");
    }
    report.schedule = lambdas;
    report.attach_ledger(oracle);
    Ok(report)
}
