use crate::error::Result;
use crate::mean::{qmean_additive, EstAmpVariant, MasterSubroutine, Payoff, Subroutine};
use crate::numeric::pow2_ceil;
use crate::oracle::DistributionOracle;

use super::{EstimateReport, EstimatorConfig, ErrorMode};

/// `scale · 2^{⌈log₂(√n/ε)⌉}`.
pub fn shannon_budget(n: usize, epsilon: f64, scale: u64) -> u64 {
    scale * pow2_ceil((n as f64).sqrt() / epsilon).max(2)
}

/// Additive-ε estimate of `H(p)`: mean of `ln(1/p̃_i)` over `i ~ p`, with
/// `p̃_i` from EstAmp′.
pub fn estimate_shannon(oracle: &mut DistributionOracle, cfg: &EstimatorConfig) -> Result<EstimateReport> {
    cfg.check_epsilon(f64::INFINITY)?;
    let mut rng = crate::rng(cfg.seed);
    let n = oracle.n();
    let eps = cfg.epsilon;
    let budget = shannon_budget(n, eps, cfg.constants.shannon_budget_scale);
    let sigma = (4.0 * n as f64 / (eps * eps)).ln();

    let mut sub = MasterSubroutine::new(oracle, budget, Payoff::LogInverse, EstAmpVariant::Prime)?;
    let exact_var = exact_variance(&sub);
    let est = qmean_additive(&mut sub, sigma, eps / 2.0, &cfg.constants.mean, cfg.mode, &mut rng)?;

    let truth = oracle.source().shannon_entropy();
    let mut report = EstimateReport::new("shannon", est.value, truth, ErrorMode::Additive, eps);
    report.in_contract = est.in_contract;
    report.extras.insert("budget".into(), budget as f64);
    report.extras.insert("charged_executions".into(), est.charged_executions as f64);
    report.extras.insert("sigma".into(), sigma);
    if exact_var > sigma * sigma {
        report.flag("variance-bound-exceeded");
    }
    if est.capped {
        report.flag("classical-cap");
    }
    report.attach_ledger(oracle);
    Ok(report)
}

pub(crate) fn exact_variance(sub: &dyn Subroutine) -> f64 {
    let Some(law) = sub.exact_law() else {
        return f64::NAN;
    };
    let mean: f64 = law.iter().map(|(v, p)| p * v).sum();
    law.iter().map(|(v, p)| p * (v - mean).powi(2)).sum()
}
