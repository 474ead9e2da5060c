use std::f64::consts::E;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::mean::{qmean_multiplicative, EstAmpVariant, MasterSubroutine, Payoff};
use crate::numeric::{median, pow2_ceil};
use crate::oracle::DistributionOracle;
use crate::SimRng;

use super::shannon::exact_variance;
use super::{EstimateReport, EstimatorConfig, ErrorMode};

/// Inner levels of the α > 1 recursion run at this multiplicative error.
const LARGE_INNER_EPS: f64 = 0.25;
/// Inner levels of the α < 1 recursion run at this multiplicative error.
const SMALL_INNER_EPS: f64 = 0.5;

/// One level of the recursion, base level first in a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelTrace {
    pub alpha: f64,
    /// Lower and upper bounds handed to the multiplicative mean estimator.
    pub a: f64,
    pub b: f64,
    /// Median estimate of `P_α` at this level.
    pub estimate: f64,
    /// Exact `P_α`.
    pub truth: f64,
    /// Whether `a ≤ truth ≤ b`.
    pub bounds_hold: bool,
    pub epsilon: f64,
    pub delta: f64,
    pub repetitions: usize,
    pub budget: u64,
    pub sigma: f64,
    /// Exact relative variance of the subroutine, `Var/E²`.
    pub relative_variance: f64,
}

/// Chain of exponents from `alpha` toward 1, ending in the base region
/// `(1, 1 + 1/ln n)` or `(1 − 1/ln n, 1)`.
pub fn annealing_schedule(alpha: f64, n: usize) -> Result<Vec<f64>> {
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(invalid(format!("schedule needs finite alpha > 0, alpha != 1, got {alpha}")));
    }
    if n < 3 {
        return Err(invalid(format!("schedule needs n >= 3, got {n}")));
    }
    let step = 1.0 / (n as f64).ln();
    let mut chain = vec![alpha];
    let mut cur = alpha;
    if alpha > 1.0 {
        while cur >= 1.0 + step {
            cur /= 1.0 + step;
            chain.push(cur);
        }
    } else {
        while cur <= 1.0 - step {
            cur /= 1.0 - step;
            chain.push(cur);
        }
    }
    Ok(chain)
}

/// `max(1, ⌈factor·ln(1/δ)⌉)`.
pub fn median_repetitions(delta: f64, factor: f64) -> usize {
    let reps = (factor * (1.0 / delta).ln()).ceil();
    if reps >= 1.0 {
        reps as usize
    } else {
        1
    }
}

/// Median of `⌈48 ln(1/δ)⌉` independent runs.
pub fn median_amplify<F>(run: F, delta: f64, rng: &mut SimRng) -> Result<f64>
where
    F: FnMut(&mut SimRng) -> Result<f64>,
{
    median_of(run, median_repetitions(delta, 48.0), rng)
}

fn median_of<F>(mut run: F, reps: usize, rng: &mut SimRng) -> Result<f64>
where
    F: FnMut(&mut SimRng) -> Result<f64>,
{
    let values = (0..reps).map(|_| run(rng)).collect::<Result<Vec<f64>>>()?;
    Ok(median(&values))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Regime {
    Large,
    Small,
}

impl Regime {
    /// `scale·2^{⌈log₂(x ln x)⌉+1}` with `x = √n/ε` or `n^{1/(2α)}/ε`.
    fn budget(self, alpha: f64, n: f64, eps: f64, scale: u64) -> u64 {
        let x = match self {
            Regime::Large => n.sqrt() / eps,
            Regime::Small => n.powf(0.5 / alpha) / eps,
        };
        scale * 2 * pow2_ceil(x * x.ln())
    }

    fn sigma(self, alpha: f64, n: f64) -> f64 {
        match self {
            Regime::Large => (5.0 * n.powf(1.0 - 1.0 / alpha)).sqrt(),
            Regime::Small => (2.0 * n.powf(1.0 / alpha - 1.0)).sqrt(),
        }
    }

    fn base_bounds(self) -> (f64, f64) {
        match self {
            Regime::Large => (1.0 / E, 1.0),
            Regime::Small => (1.0, E),
        }
    }

    /// Bounds on `P_α` from an estimate `prev` of the next level's power sum.
    fn recursive_bounds(self, prev: f64, step: f64) -> (f64, f64) {
        match self {
            Regime::Large => {
                let k = 1.0 + step;
                ((0.75 * prev).powf(k) / E, (1.25 * prev).powf(k))
            }
            Regime::Small => {
                let k = 1.0 - step;
                ((0.5 * prev).powf(k), E * (2.0 * prev).powf(k))
            }
        }
    }

    fn inner_eps(self) -> f64 {
        match self {
            Regime::Large => LARGE_INNER_EPS,
            Regime::Small => SMALL_INNER_EPS,
        }
    }

    /// `1/(12 ln n · |ln α|)` for a call made from level `alpha`.
    fn inner_delta(self, caller_alpha: f64, n: f64) -> f64 {
        1.0 / (12.0 * n.ln() * caller_alpha.ln().abs())
    }

    fn variant(self) -> EstAmpVariant {
        match self {
            Regime::Large => EstAmpVariant::Plain,
            Regime::Small => EstAmpVariant::Prime,
        }
    }
}

/// Multiplicative-ε estimate of `P_α` for non-integer `α > 1`.
pub fn estimate_power_sum_large(
    oracle: &mut DistributionOracle,
    alpha: f64,
    cfg: &EstimatorConfig,
) -> Result<EstimateReport> {
    if !(alpha > 1.0) || alpha.fract() == 0.0 || !alpha.is_finite() {
        return Err(invalid(format!(
            "this estimator needs non-integer alpha > 1, got {alpha}"
        )));
    }
    cfg.check_epsilon(0.25)?;
    estimate_recursive(oracle, alpha, cfg, Regime::Large)
}

/// Multiplicative-ε estimate of `P_α` for `0 < α < 1`.
pub fn estimate_power_sum_small(
    oracle: &mut DistributionOracle,
    alpha: f64,
    cfg: &EstimatorConfig,
) -> Result<EstimateReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("this estimator needs 0 < alpha < 1, got {alpha}")));
    }
    cfg.check_epsilon(1.0)?;
    estimate_recursive(oracle, alpha, cfg, Regime::Small)
}

fn estimate_recursive(
    oracle: &mut DistributionOracle,
    alpha: f64,
    cfg: &EstimatorConfig,
    regime: Regime,
) -> Result<EstimateReport> {
    cfg.check_delta()?;
    let mut rng = crate::rng(cfg.seed);
    // zero-mass padding leaves every power sum unchanged
    let n_sched = oracle.n().max(3);
    let n = n_sched as f64;
    let step = 1.0 / n.ln();
    let schedule = annealing_schedule(alpha, n_sched)?;
    let truth_of = |o: &DistributionOracle, a: f64| o.source().power_sum(a);

    let mut levels = Vec::with_capacity(schedule.len());
    let mut prev: Option<f64> = None;
    let mut in_contract = true;
    let mut capped = false;
    let mut mean_calls = 0u64;
    // walk from the base level up to α
    for k in (0..schedule.len()).rev() {
        let level_alpha = schedule[k];
        let top = k == 0;
        let (eps, delta) = if top {
            (cfg.epsilon, cfg.delta)
        } else {
            (regime.inner_eps(), regime.inner_delta(schedule[k - 1], n))
        };
        let (a, b) = match prev {
            None => regime.base_bounds(),
            Some(p) => regime.recursive_bounds(p, step),
        };
        let budget = regime.budget(level_alpha, n, eps, cfg.constants.renyi_budget_scale);
        let sigma = regime.sigma(level_alpha, n);
        let reps = median_repetitions(delta, cfg.constants.median_factor);

        let mut sub = MasterSubroutine::new(oracle, budget, Payoff::Power(level_alpha - 1.0), regime.variant())?;
        let exact_mean = crate::mean::exact_expectation(sub.spec())?.0;
        let relative_variance = exact_variance(&sub) / (exact_mean * exact_mean);
        let mean_cfg = &cfg.constants.mean;
        let estimate = median_of(
            |rng| {
                let run = qmean_multiplicative(&mut sub, sigma, a, b, eps, mean_cfg, cfg.mode, rng)?;
                in_contract &= run.estimate.in_contract;
                capped |= run.estimate.capped;
                Ok(run.estimate.value)
            },
            reps,
            &mut rng,
        )?;
        mean_calls += reps as u64;

        let truth = truth_of(oracle, level_alpha);
        levels.push(LevelTrace {
            alpha: level_alpha,
            a,
            b,
            estimate,
            truth,
            bounds_hold: a <= truth && truth <= b,
            epsilon: eps,
            delta,
            repetitions: reps,
            budget,
            sigma,
            relative_variance,
        });
        // a nonpositive median would give meaningless bounds at the next level
        prev = Some(estimate.max(f64::MIN_POSITIVE));
    }

    let top = levels.last().expect("schedule is nonempty").clone();
    let name = match regime {
        Regime::Large => "renyi-large",
        Regime::Small => "renyi-small",
    };
    let mut report = EstimateReport::new(name, top.estimate, top.truth, ErrorMode::Multiplicative, cfg.epsilon);
    report.alpha = Some(alpha);
    report.in_contract = in_contract;
    report.schedule = schedule;
    if levels.iter().any(|l| !l.bounds_hold) {
        report.flag("bounds-violated");
    }
    if levels.iter().any(|l| l.relative_variance > l.sigma * l.sigma) {
        report.flag("variance-bound-exceeded");
    }
    if capped {
        report.flag("classical-cap");
    }
    report.extras.insert("budget".into(), top.budget as f64);
    report.extras.insert("sigma".into(), top.sigma);
    report.extras.insert("mean_calls".into(), mean_calls as f64);
    report.levels = levels;
    report.set_entropy(alpha);
    report.attach_ledger(oracle);
    Ok(report)
}
