//! Exact rational distributions on `{0, .., n-1}` and ground-truth entropic
//! functionals.
//!
//! A distribution is stored as integer counts `m_i` over a common denominator
//! `S`, so `p_i = m_i / S` exactly. Elements are 0-based throughout the crate.

use std::path::Path;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct RationalDistribution {
    #[serde(rename = "S")]
    total: u64,
    counts: Vec<u64>,
}

#[derive(Deserialize)]
struct RawDistribution {
    #[serde(rename = "S")]
    total: u64,
    counts: Vec<u64>,
}

impl TryFrom<RawDistribution> for RationalDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        RationalDistribution::new(raw.counts, raw.total)
    }
}

impl RationalDistribution {
    pub fn new(counts: Vec<u64>, total: u64) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        if total == 0 {
            return Err(Error::ZeroDenominator);
        }
        let sum: u128 = counts.iter().map(|&c| c as u128).sum();
        if sum != total as u128 {
            return Err(Error::CountMismatch { sum, total });
        }
        Ok(Self { total, counts })
    }

    /// Denominator taken as the sum of the counts.
    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        Self::new(counts, total)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::from_counts(vec![1; n])
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("distribution serializes")
    }

    /// Universe size.
    pub fn n(&self) -> usize {
        self.counts.len()
    }

    /// Common denominator `S`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.counts[i] as f64 / self.total as f64
    }

    pub fn prob_exact(&self, i: usize) -> Ratio<u64> {
        Ratio::new(self.counts[i], self.total)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.prob(i)).collect()
    }

    /// Number of elements with nonzero probability.
    pub fn support_size(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn max_probability(&self) -> f64 {
        let m = self.counts.iter().copied().max().unwrap_or(0);
        m as f64 / self.total as f64
    }

    fn nonzero(&self) -> impl Iterator<Item = u64> + '_ {
        self.counts.iter().copied().filter(|&c| c > 0)
    }

    /// `H(p) = Σ p_i ln(1/p_i)` in nats.
    pub fn shannon_entropy(&self) -> f64 {
        let ln_s = (self.total as f64).ln();
        let s = self.total as f64;
        compensated_sum(self.nonzero().map(|c| (c as f64 / s) * (ln_s - (c as f64).ln())))
    }

    /// `P_α(p) = Σ_{p_i > 0} p_i^α`.
    pub fn power_sum(&self, alpha: f64) -> f64 {
        let s = self.total as f64;
        compensated_sum(self.nonzero().map(|c| (c as f64 / s).powf(alpha)))
    }

    /// `P_α(p) − 1`, accurate when α is close to 1.
    fn power_sum_minus_one(&self, alpha: f64) -> f64 {
        let ln_s = (self.total as f64).ln();
        let s = self.total as f64;
        compensated_sum(self.nonzero().map(|c| {
            let ln_p = (c as f64).ln() - ln_s;
            (c as f64 / s) * ((alpha - 1.0) * ln_p).exp_m1()
        }))
    }

    /// Exact power sum for integer orders, in rational arithmetic.
    pub fn power_sum_exact(&self, k: u32) -> BigRational {
        let s = BigInt::from(self.total);
        let mut acc = BigRational::zero();
        for c in self.nonzero() {
            acc += BigRational::new(BigInt::from(c), s.clone()).pow(k as i32);
        }
        acc
    }

    /// Exact `Σ p_i`, always one for a valid distribution.
    pub fn mass_exact(&self) -> BigRational {
        let sum: BigInt = self.counts.iter().map(|&c| BigInt::from(c)).sum();
        let mass = BigRational::new(sum, BigInt::from(self.total));
        debug_assert!(mass.is_one());
        mass
    }

    /// Rényi entropy of order `alpha` in nats. Orders 0, 1 and `f64::INFINITY`
    /// are dispatched to Hartley, Shannon and min-entropy.
    pub fn renyi_entropy(&self, alpha: f64) -> f64 {
        assert!(alpha >= 0.0, "Rényi order must be non-negative");
        if alpha == 0.0 {
            (self.support_size() as f64).ln()
        } else if alpha == 1.0 {
            self.shannon_entropy()
        } else if alpha.is_infinite() {
            -self.max_probability().ln()
        } else if (alpha - 1.0).abs() < 0.5 {
            self.power_sum_minus_one(alpha).ln_1p() / (1.0 - alpha)
        } else {
            self.power_sum(alpha).ln() / (1.0 - alpha)
        }
    }

    /// Expected number of distinct symbols in `n_samples` draws:
    /// `Σ (1 − (1 − p_i)^N)`.
    pub fn support_coverage(&self, n_samples: u64) -> f64 {
        let s = self.total as f64;
        let n = n_samples as f64;
        compensated_sum(self.nonzero().map(|c| {
            let p = c as f64 / s;
            -(n * (-p).ln_1p()).exp_m1()
        }))
    }

    /// `D_KL(p ‖ q)` in nats.
    pub fn kl_divergence(&self, q: &RationalDistribution) -> Result<f64> {
        if self.n() != q.n() {
            return Err(Error::SizeMismatch(self.n(), q.n()));
        }
        let (sp, sq) = (self.total as f64, q.total as f64);
        let mut terms = Vec::with_capacity(self.n());
        for (i, (&cp, &cq)) in self.counts.iter().zip(&q.counts).enumerate() {
            if cp == 0 {
                continue;
            }
            if cq == 0 {
                return Err(Error::AbsoluteContinuity { index: i });
            }
            // ln(p/q) = ln(cp·Sq) − ln(cq·Sp), kept in one log to limit rounding
            let ratio = (cp as f64 * sq) / (cq as f64 * sp);
            terms.push((cp as f64 / sp) * ratio.ln());
        }
        Ok(compensated_sum(terms))
    }

    /// Smallest `f` with `p_i ≤ f·q_i` for all i (infinite if q misses p's support).
    pub fn max_ratio(&self, q: &RationalDistribution) -> Result<f64> {
        if self.n() != q.n() {
            return Err(Error::SizeMismatch(self.n(), q.n()));
        }
        let mut f = 0.0f64;
        for (&cp, &cq) in self.counts.iter().zip(&q.counts) {
            if cp == 0 {
                continue;
            }
            if cq == 0 {
                return Ok(f64::INFINITY);
            }
            f = f.max((cp as f64 * q.total as f64) / (cq as f64 * self.total as f64));
        }
        Ok(f)
    }
}
