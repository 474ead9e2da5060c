use crate::error::{Error, Result};
use crate::mean::{qmean_additive, EstAmpVariant, MasterSubroutine, Payoff};
use crate::numeric::pow2_ceil;
use crate::oracle::DistributionOracle;

use super::shannon::exact_variance;
use super::{EstimateReport, EstimatorConfig, ErrorMode};

/// `scale · 2^{⌈log₂ √(N/ε)⌉}`.
pub fn coverage_budget(n_samples: u64, epsilon: f64, scale: u64) -> u64 {
    scale * pow2_ceil((n_samples as f64 / epsilon).sqrt()).max(2)
}

struct Coverage {
    scaled: f64,
    raw: f64,
    truth: f64,
    budget: u64,
    charged: u64,
    in_contract: bool,
    capped: bool,
    variance_exceeded: bool,
}

fn run_coverage(oracle: &mut DistributionOracle, n_samples: u64, eps: f64, cfg: &EstimatorConfig) -> Result<Coverage> {
    let mut rng = crate::rng(cfg.seed);
    let budget = coverage_budget(n_samples, eps, cfg.constants.coverage_budget_scale);
    let sigma = n_samples as f64;
    let mut sub = MasterSubroutine::new(oracle, budget, Payoff::Coverage(n_samples), EstAmpVariant::Plain)?;
    let var = exact_variance(&sub);
    let est = qmean_additive(&mut sub, sigma, eps * sigma / 2.0, &cfg.constants.mean, cfg.mode, &mut rng)?;
    let truth = oracle.source().support_coverage(n_samples);
    Ok(Coverage {
        scaled: est.value / sigma,
        raw: est.value,
        truth,
        budget,
        charged: est.charged_executions,
        in_contract: est.in_contract,
        capped: est.capped,
        variance_exceeded: var > sigma * sigma,
    })
}

/// Additive-ε estimate of `S_N(p)/N` where `S_N` is the expected number of
/// distinct elements in `N` samples.
pub fn estimate_support_coverage(
    oracle: &mut DistributionOracle,
    n_samples: u64,
    cfg: &EstimatorConfig,
) -> Result<EstimateReport> {
    cfg.check_epsilon(1.0)?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    let c = run_coverage(oracle, n_samples, cfg.epsilon, cfg)?;
    let mut report = EstimateReport::new(
        "coverage",
        c.scaled,
        c.truth / n_samples as f64,
        ErrorMode::Additive,
        cfg.epsilon,
    );
    report.in_contract = c.in_contract;
    report.extras.insert("n_samples".into(), n_samples as f64);
    report.extras.insert("coverage_estimate".into(), c.raw);
    report.extras.insert("budget".into(), c.budget as f64);
    report.extras.insert("charged_executions".into(), c.charged as f64);
    if c.variance_exceeded {
        report.flag("variance-bound-exceeded");
    }
    if c.capped {
        report.flag("classical-cap");
    }
    report.attach_ledger(oracle);
    Ok(report)
}

/// Additive-ε estimate of `supp(p)/m` under the promise that every nonzero
/// probability is at least `1/m`.
pub fn estimate_support_size(oracle: &mut DistributionOracle, m: u64, cfg: &EstimatorConfig) -> Result<EstimateReport> {
    cfg.check_epsilon(1.0)?;
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    let p = oracle.source();
    if let Some(i) = (0..p.n()).find(|&i| {
        let c = p.count(i) as u128;
        c > 0 && c * (m as u128) < p.total() as u128
    }) {
        return Err(Error::Promise(format!(
            "p_{i} = {} is positive but below 1/m = 1/{m}",
            p.prob_exact(i)
        )));
    }
    let eps = cfg.epsilon;
    let log_term = (2.0 / eps).ln();
    let n_samples = (m as f64 * log_term).ceil() as u64;
    let inner_eps = eps / (2.0 * log_term);
    let truth = p.support_size() as f64 / m as f64;
    let c = run_coverage(oracle, n_samples, inner_eps, cfg)?;
    let size = c.raw.ceil();

    let mut report = EstimateReport::new("support-size", size / m as f64, truth, ErrorMode::Additive, eps);
    report.in_contract = c.in_contract;
    report.extras.insert("m".into(), m as f64);
    report.extras.insert("n_samples".into(), n_samples as f64);
    report.extras.insert("inner_epsilon".into(), inner_eps);
    report.extras.insert("support_estimate".into(), size);
    report.extras.insert("budget".into(), c.budget as f64);
    report.extras.insert("charged_executions".into(), c.charged as f64);
    if c.variance_exceeded {
        report.flag("variance-bound-exceeded");
    }
    if c.capped {
        report.flag("classical-cap");
    }
    report.attach_ledger(oracle);
    Ok(report)
}
