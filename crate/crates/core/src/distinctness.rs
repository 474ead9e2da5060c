//! α-wise collision counting, a simulated k-distinctness solver and the
//! collision-based integer power-sum estimator.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimators::{EstimateReport, EstimatorConfig, ErrorMode};
use crate::numeric::{binomial_f64, binomial_u128, pow2_ceil};
use crate::oracle::{DistributionOracle, Phase, QueryLedger};
use crate::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CollisionCount {
    /// `Σ_i C(m_i, order)` over the multiplicities of the sequence.
    pub value: u128,
    pub sequence_length: usize,
    pub order: u32,
}

fn multiplicities(seq: &[usize]) -> Vec<u64> {
    let mut sorted = seq.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].partition_point(|&v| v == sorted[i]) + i;
        out.push((j - i) as u64);
        i = j;
    }
    out
}

pub fn count_alpha_collisions(seq: &[usize], alpha: u32) -> CollisionCount {
    assert!(alpha >= 2, "collision order must be at least 2");
    let value = multiplicities(seq)
        .into_iter()
        .map(|m| binomial_u128(m, alpha as u64).expect("collision count overflow"))
        .sum();
    CollisionCount { value, sequence_length: seq.len(), order: alpha }
}

/// `ν(k) = 1 − 2^{k−2}/(2^k − 1)`.
pub fn nu(k: u32) -> f64 {
    let two_k = 2f64.powi(k as i32);
    1.0 - (two_k / 4.0) / (two_k - 1.0)
}

/// Query charge of a k-distinctness call as a function of (k, length, failure).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "model", content = "c")]
pub enum DistinctnessCostModel {
    /// `⌈c·2^{k²}·len^{ν(k)}·ln(1/δ)⌉`
    Belovs(f64),
    /// `⌈c·k²·len^{k/(k+1)}⌉`
    Ambainis(f64),
    /// `⌈c·len^{3/4}⌉`
    Flat34(f64),
}

impl DistinctnessCostModel {
    pub fn belovs() -> Self {
        Self::Belovs(1.0)
    }

    pub fn ambainis() -> Self {
        Self::Ambainis(1.0)
    }

    pub fn flat34() -> Self {
        Self::Flat34(1.0)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Belovs(_) => "belovs",
            Self::Ambainis(_) => "ambainis",
            Self::Flat34(_) => "flat34",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "belovs" => Ok(Self::belovs()),
            "ambainis" => Ok(Self::ambainis()),
            "flat34" => Ok(Self::flat34()),
            other => Err(invalid(format!("unknown distinctness cost model '{other}'"))),
        }
    }

    pub fn charge(&self, k: u32, len: usize, fail_prob: f64) -> u64 {
        let len = len as f64;
        let k_f = k as f64;
        let raw = match *self {
            Self::Belovs(c) => {
                let log_term = (1.0 / fail_prob).ln().max(0.0);
                c * 2f64.powf(k_f * k_f) * len.powf(nu(k)) * log_term
            }
            Self::Ambainis(c) => c * k_f * k_f * len.powf(k_f / (k_f + 1.0)),
            Self::Flat34(c) => c * len.powf(0.75),
        };
        if raw >= u64::MAX as f64 {
            u64::MAX
        } else {
            // Absorb rounding fuzz so exact integers are not bumped up by one.
            (raw * (1.0 - 1e-12)).ceil() as u64
        }
    }
}

/// Element whose k-th occurrence comes first in sequence order.
fn first_k_collision(seq: &[usize], k: u32) -> Option<usize> {
    let mut seen: HashMap<usize, u32> = HashMap::new();
    for &v in seq {
        let c = seen.entry(v).or_insert(0);
        *c += 1;
        if *c >= k {
            return Some(v);
        }
    }
    None
}

/// Most frequent element (smallest on ties), used for false positives.
fn most_frequent(seq: &[usize]) -> Option<usize> {
    let mut counts: HashMap<usize, u32> = HashMap::new();
    for &v in seq {
        *counts.entry(v).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(v, _)| v)
}

/// Simulated k-distinctness: the truthful verdict with probability
/// `1 − fail_prob`, the opposite verdict otherwise. Charges the cost model
/// under "distinctness".
pub fn k_distinctness(
    seq: &[usize],
    k: u32,
    fail_prob: f64,
    cost: &DistinctnessCostModel,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Option<usize> {
    assert!(k >= 2, "distinctness order must be at least 2");
    assert!((0.0..1.0).contains(&fail_prob), "failure probability outside [0, 1)");
    ledger.charge(Phase::Distinctness, cost.charge(k, seq.len(), fail_prob.max(f64::MIN_POSITIVE)));
    let truth = first_k_collision(seq, k);
    let flip = rng.random::<f64>() < fail_prob;
    match (truth, flip) {
        (t, false) => t,
        (Some(_), true) => None,
        (None, true) => most_frequent(seq),
    }
}

/// Collision-based estimate of `P_α` for integer `α ≥ 2` with multiplicative
/// error `ε`.
pub fn estimate_power_sum_integer(
    oracle: &mut DistributionOracle,
    alpha: u32,
    cfg: &EstimatorConfig,
) -> Result<EstimateReport> {
    if alpha < 2 {
        return Err(invalid(format!("integer estimator needs alpha >= 2, got {alpha}")));
    }
    cfg.check_epsilon(f64::INFINITY)?;
    let mut rng = crate::rng(cfg.seed);
    let cost = cfg.cost_model.unwrap_or(DistinctnessCostModel::belovs());
    let n = oracle.n();
    let cap_exp = pow2_ceil(alpha as f64 * n as f64).trailing_zeros();
    let search_fail = 1.0 / (10.0 * cap_exp.max(1) as f64);

    let mut fixed_len = 1usize << cap_exp;
    let mut lengths = Vec::new();
    for i in 0..=cap_exp {
        let len = 1usize << i;
        lengths.push(len as f64);
        let seq: Vec<usize> = (0..len).map(|_| oracle.sample(&mut rng)).collect();
        if k_distinctness(&seq, alpha, search_fail, &cost, oracle.ledger_mut(), &mut rng).is_some() {
            fixed_len = len;
            break;
        }
    }

    let eps = cfg.epsilon;
    let sequences = (cfg.constants.collision_repetitions / (eps * eps)).ceil() as u64;
    let count_fail = (eps * eps / fixed_len as f64).min(0.5);
    let per_sequence = cost.charge(alpha, fixed_len, count_fail);
    let mut counts = Vec::with_capacity(sequences as usize);
    let mut seq = vec![0usize; fixed_len];
    for _ in 0..sequences {
        for slot in seq.iter_mut() {
            *slot = oracle.sample(&mut rng);
        }
        counts.push(count_alpha_collisions(&seq, alpha).value as f64);
        oracle.ledger_mut().charge(Phase::Distinctness, per_sequence);
    }
    let norm = binomial_f64(fixed_len as u64, alpha as u64);
    let total: f64 = counts.iter().sum();
    let estimate = total / (sequences as f64 * norm);
    let mean_c = total / sequences as f64;
    let var_c = counts.iter().map(|c| (c - mean_c).powi(2)).sum::<f64>() / (sequences as f64 - 1.0).max(1.0);

    let truth = oracle.source().power_sum(alpha as f64);
    let mut report = EstimateReport::new("renyi-integer", estimate, truth, ErrorMode::Multiplicative, eps);
    report.alpha = Some(alpha as f64);
    report.schedule = lengths;
    report.extras.insert("fixed_length".into(), fixed_len as f64);
    report.extras.insert("sequences".into(), sequences as f64);
    report.extras.insert("collision_variance".into(), var_c);
    if var_c > cfg.constants.collision_variance_limit {
        report.flag("collision-variance-exceeded");
    }
    report.set_entropy(alpha as f64);
    report.attach_ledger(oracle);
    Ok(report)
}
