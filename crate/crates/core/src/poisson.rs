//! Poisson sampling and exact tail probabilities.

use rand::Rng;
use rand_distr::Distribution;

use crate::error::{invalid, Result};
use crate::numeric::compensated_sum;
use crate::SimRng;

/// Means up to this value are sampled by CDF inversion.
pub const INVERSION_LIMIT: f64 = 30.0;

/// One draw from `Poisson(mean)`.
pub fn sample_poisson(mean: f64, rng: &mut SimRng) -> Result<u64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(invalid(format!("Poisson mean must be finite and non-negative, got {mean}")));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    if mean <= INVERSION_LIMIT {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut pmf = (-mean).exp();
        let mut cdf = pmf;
        while u > cdf {
            k += 1;
            pmf *= mean / k as f64;
            cdf += pmf;
            if pmf == 0.0 && cdf < u {
                // u landed in the rounding gap above the summed mass
                break;
            }
        }
        return Ok(k);
    }
    let dist = rand_distr::Poisson::new(mean).map_err(|e| invalid(e.to_string()))?;
    Ok(dist.sample(rng) as u64)
}

/// `ln Pr[X = k]` for `X ~ Poisson(mean)`, `mean > 0`.
fn log_pmf(mean: f64, k: u64) -> f64 {
    let log_fact: f64 = compensated_sum((2..=k).map(|j| (j as f64).ln()));
    k as f64 * mean.ln() - mean - log_fact
}

/// `Pr[X ≥ k]` for `X ~ Poisson(mean)`, summed term by term.
pub fn tail_at_least(mean: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if mean <= 0.0 {
        return 0.0;
    }
    if (k as f64) > mean {
        // terms decrease from k on
        let mut log_term = log_pmf(mean, k);
        let mut terms = Vec::new();
        let mut j = k;
        loop {
            let t = log_term.exp();
            terms.push(t);
            j += 1;
            log_term += mean.ln() - (j as f64).ln();
            if t < 1e-20 * terms[0].max(f64::MIN_POSITIVE) || terms.len() > 1_000_000 {
                break;
            }
        }
        compensated_sum(terms)
    } else {
        let mut log_term = -mean;
        let mut terms = Vec::with_capacity(k as usize);
        for j in 0..k {
            if j > 0 {
                log_term += mean.ln() - (j as f64).ln();
            }
            terms.push(log_term.exp());
        }
        (1.0 - compensated_sum(terms)).max(0.0)
    }
}

/// `Pr[X ≥ x]` for real `x`, i.e. `Pr[X ≥ ⌈x⌉]`.
pub fn tail_at_least_real(mean: f64, x: f64) -> f64 {
    tail_at_least(mean, x.max(0.0).ceil() as u64)
}

/// Collision threshold `16 ln n/ε²` of the min-entropy estimator.
pub fn min_entropy_threshold(n: usize, epsilon: f64) -> f64 {
    16.0 * (n as f64).ln() / (epsilon * epsilon)
}

/// Margins of the two tail bounds at `(n, ε)`: `tail(threshold) − 0.15`
/// (must be positive) and `2/n² − tail(threshold/√(1+ε))` (non-negative
/// when the upper bound holds with the relaxed factor 2).
pub fn tail_margins(n: usize, epsilon: f64) -> (f64, f64) {
    let t = min_entropy_threshold(n, epsilon);
    let high = tail_at_least_real(t, t) - 0.15;
    // the tail is increasing in the mean, so the supremum over μ < t/√(1+ε)
    // is its value at the endpoint
    let low_mean = t / (1.0 + epsilon).sqrt();
    let low = 2.0 / (n as f64 * n as f64) - tail_at_least_real(low_mean, t);
    (high, low)
}
