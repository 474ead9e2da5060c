//! Test distributions: standard families and the two-valued hard pairs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;

use crate::distributions::RationalDistribution;
use crate::error::{invalid, Error, Result};

/// A distribution family with its parameters.
///
/// Shorthand forms: `uniform:N`, `point:N`, `zipf:S:N`, `two-valued:N:C:D:TOTAL`,
/// `hard-shannon:N:EPS:MEMBER`, `hard-coverage:N:EPS:MEMBER`, `lpairs:N:L`.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    Uniform { n: usize },
    Point { n: usize },
    /// `p_i ∝ i^{−s}`, apportioned over `n·⌈Σ_i i^{−s}⌉`.
    Zipf { s: f64, n: usize },
    /// `n − c` bins at `1/n − d/total`, `c` bins sharing the rest.
    TwoValued { n: usize, c: usize, d: u64, total: u64 },
    /// Member 1 or 2 of the Shannon hard pair.
    HardShannon { n: usize, epsilon: f64, member: u8 },
    /// Member 1 or 2 of the coverage hard pair.
    HardCoverage { n: usize, epsilon: f64, member: u8 },
    /// `S = n` table with `l` colliding pairs, otherwise injective.
    LPairs { n: usize, l: usize },
}

fn field<T: FromStr>(parts: &[&str], idx: usize, text: &str) -> Result<T> {
    parts
        .get(idx)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| invalid(format!("malformed instance spec '{text}'")))
}

impl FromStr for InstanceSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let arity = |k: usize| -> Result<()> {
            if parts.len() == k {
                Ok(())
            } else {
                Err(invalid(format!("instance spec '{text}' needs {} parameters", k - 1)))
            }
        };
        let spec = match parts[0] {
            "uniform" => {
                arity(2)?;
                InstanceSpec::Uniform { n: field(&parts, 1, text)? }
            }
            "point" => {
                arity(2)?;
                InstanceSpec::Point { n: field(&parts, 1, text)? }
            }
            "zipf" => {
                arity(3)?;
                InstanceSpec::Zipf { s: field(&parts, 1, text)?, n: field(&parts, 2, text)? }
            }
            "two-valued" => {
                arity(5)?;
                InstanceSpec::TwoValued {
                    n: field(&parts, 1, text)?,
                    c: field(&parts, 2, text)?,
                    d: field(&parts, 3, text)?,
                    total: field(&parts, 4, text)?,
                }
            }
            "hard-shannon" | "hard-coverage" => {
                arity(4)?;
                let n = field(&parts, 1, text)?;
                let epsilon = field(&parts, 2, text)?;
                let member = field(&parts, 3, text)?;
                if parts[0] == "hard-shannon" {
                    InstanceSpec::HardShannon { n, epsilon, member }
                } else {
                    InstanceSpec::HardCoverage { n, epsilon, member }
                }
            }
            "lpairs" => {
                arity(3)?;
                InstanceSpec::LPairs { n: field(&parts, 1, text)?, l: field(&parts, 2, text)? }
            }
            other => return Err(invalid(format!("unknown instance family '{other}'"))),
        };
        Ok(spec)
    }
}

impl fmt::Display for InstanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceSpec::Uniform { n } => write!(f, "uniform:{n}"),
            InstanceSpec::Point { n } => write!(f, "point:{n}"),
            InstanceSpec::Zipf { s, n } => write!(f, "zipf:{s}:{n}"),
            InstanceSpec::TwoValued { n, c, d, total } => write!(f, "two-valued:{n}:{c}:{d}:{total}"),
            InstanceSpec::HardShannon { n, epsilon, member } => write!(f, "hard-shannon:{n}:{epsilon}:{member}"),
            InstanceSpec::HardCoverage { n, epsilon, member } => write!(f, "hard-coverage:{n}:{epsilon}:{member}"),
            InstanceSpec::LPairs { n, l } => write!(f, "lpairs:{n}:{l}"),
        }
    }
}

impl InstanceSpec {
    pub fn n(&self) -> usize {
        match *self {
            InstanceSpec::Uniform { n }
            | InstanceSpec::Point { n }
            | InstanceSpec::Zipf { n, .. }
            | InstanceSpec::TwoValued { n, .. }
            | InstanceSpec::HardShannon { n, .. }
            | InstanceSpec::HardCoverage { n, .. }
            | InstanceSpec::LPairs { n, .. } => n,
        }
    }
}

/// Build the distribution of `spec`. The seed only places the colliding
/// pairs of `lpairs`; every other family is canonical.
pub fn generate(spec: &InstanceSpec, seed: u64) -> Result<RationalDistribution> {
    match *spec {
        InstanceSpec::Uniform { n } => RationalDistribution::uniform(n),
        InstanceSpec::Point { n } => {
            if n == 0 {
                return Err(Error::EmptyUniverse);
            }
            let mut counts = vec![0; n];
            counts[0] = n as u64;
            RationalDistribution::new(counts, n as u64)
        }
        InstanceSpec::Zipf { s, n } => zipf(s, n),
        InstanceSpec::TwoValued { n, c, d, total } => two_valued(n, c, d, total),
        InstanceSpec::HardShannon { n, epsilon, member } => {
            let (a, b) = hard_pair_shannon(n, epsilon)?;
            pick(a, b, member)
        }
        InstanceSpec::HardCoverage { n, epsilon, member } => {
            let (a, b) = hard_pair_coverage(n, epsilon)?;
            pick(a, b, member)
        }
        InstanceSpec::LPairs { n, l } => {
            let mut counts = pairs_counts(n, l)?;
            counts.shuffle(&mut crate::rng(seed));
            RationalDistribution::new(counts, n as u64)
        }
    }
}

fn pick(a: RationalDistribution, b: RationalDistribution, member: u8) -> Result<RationalDistribution> {
    match member {
        1 => Ok(a),
        2 => Ok(b),
        m => Err(invalid(format!("hard-pair member must be 1 or 2, got {m}"))),
    }
}

fn zipf(s: f64, n: usize) -> Result<RationalDistribution> {
    if n == 0 {
        return Err(Error::EmptyUniverse);
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(invalid(format!("zipf exponent must be finite and non-negative, got {s}")));
    }
    let weights: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-s)).collect();
    let norm: f64 = weights.iter().sum();
    let total = n as u64 * norm.ceil() as u64;
    let counts = apportion(&weights, total);
    RationalDistribution::new(counts, total)
}

/// Largest-remainder rounding of `total·w_i/Σw` to integers summing to `total`.
fn apportion(weights: &[f64], total: u64) -> Vec<u64> {
    let norm: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / norm).collect();
    let mut counts: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    counts
}

fn two_valued(n: usize, c: usize, d: u64, total: u64) -> Result<RationalDistribution> {
    if n == 0 {
        return Err(Error::EmptyUniverse);
    }
    if c == 0 || c > n {
        return Err(invalid(format!("two-valued needs 1 <= c <= n, got c = {c}")));
    }
    if !total.is_multiple_of(n as u64) {
        return Err(invalid(format!("two-valued needs n | S, got n = {n}, S = {total}")));
    }
    let base = total / n as u64;
    if d > base {
        return Err(invalid(format!("d = {d} exceeds S/n = {base}")));
    }
    let moved = (n - c) as u64 * d;
    if !moved.is_multiple_of(c as u64) {
        return Err(invalid(format!("(n - c)·d = {moved} is not divisible by c = {c}")));
    }
    let heavy = base + moved / c as u64;
    let mut counts = vec![heavy; c];
    counts.extend(std::iter::repeat_n(base - d, n - c));
    RationalDistribution::new(counts, total)
}

/// `l` bins at 2, `n − 2l` at 1, `l` at 0.
fn pairs_counts(n: usize, l: usize) -> Result<Vec<u64>> {
    if l == 0 || 2 * l > n {
        return Err(invalid(format!("need 1 <= l <= n/2, got l = {l}, n = {n}")));
    }
    let mut counts = vec![2u64; l];
    counts.extend(std::iter::repeat_n(1, n - 2 * l));
    counts.extend(std::iter::repeat_n(0, l));
    Ok(counts)
}

fn hard_pair(n: usize, l: usize) -> Result<(RationalDistribution, RationalDistribution)> {
    let p1 = RationalDistribution::uniform(n)?;
    let p2 = RationalDistribution::new(pairs_counts(n, l)?, n as u64)?;
    Ok((p1, p2))
}

/// `l = ⌈nε/ln 2⌉`.
pub fn hard_shannon_pairs(n: usize, epsilon: f64) -> usize {
    (n as f64 * epsilon / std::f64::consts::LN_2).ceil() as usize
}

/// `l = ⌈6nε⌉`.
pub fn hard_coverage_pairs(n: usize, epsilon: f64) -> usize {
    (6.0 * n as f64 * epsilon).ceil() as usize
}

/// Uniform on `n` versus `l = ⌈nε/ln 2⌉` bins at `2/n` and `n − 2l` at `1/n`.
pub fn hard_pair_shannon(n: usize, epsilon: f64) -> Result<(RationalDistribution, RationalDistribution)> {
    if !(epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    hard_pair(n, hard_shannon_pairs(n, epsilon))
}

/// As [`hard_pair_shannon`] with `l = ⌈6nε⌉`.
pub fn hard_pair_coverage(n: usize, epsilon: f64) -> Result<(RationalDistribution, RationalDistribution)> {
    if !(epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    hard_pair(n, hard_coverage_pairs(n, epsilon))
}

/// `|S_n(p₁) − S_n(p₂)|/n` for the coverage hard pair, with `n` samples.
pub fn coverage_gap(n: usize, epsilon: f64) -> Result<f64> {
    let (p1, p2) = hard_pair_coverage(n, epsilon)?;
    let n_samples = n as u64;
    Ok((p1.support_coverage(n_samples) - p2.support_coverage(n_samples)).abs() / n as f64)
}

/// A real number `Σ_q c_q ln q` with rational coefficients over primes.
pub type LogLinear = BTreeMap<u64, BigRational>;

fn add_log(form: &mut LogLinear, mut x: u64, coeff: &BigRational) {
    let mut q = 2u64;
    while q * q <= x {
        while x.is_multiple_of(q) {
            *form.entry(q).or_insert_with(BigRational::zero) += coeff;
            x /= q;
        }
        q += 1;
    }
    if x > 1 {
        *form.entry(x).or_insert_with(BigRational::zero) += coeff;
    }
    form.retain(|_, c| !c.is_zero());
}

/// Shannon entropy as an exact combination of logarithms of primes.
pub fn entropy_log_form(p: &RationalDistribution) -> LogLinear {
    let total = BigInt::from(p.total());
    let mut form = LogLinear::new();
    for &m in p.counts().iter().filter(|&&m| m > 0) {
        let weight = BigRational::new(BigInt::from(m), total.clone());
        add_log(&mut form, p.total(), &weight);
        add_log(&mut form, m, &-weight);
    }
    form
}

/// `a − b` on log-linear forms.
pub fn log_form_difference(a: &LogLinear, b: &LogLinear) -> LogLinear {
    let mut out = a.clone();
    for (&q, c) in b {
        *out.entry(q).or_insert_with(BigRational::zero) -= c;
    }
    out.retain(|_, c| !c.is_zero());
    out
}

pub fn log_form_value(form: &LogLinear) -> f64 {
    form.iter()
        .map(|(&q, c)| c.to_f64().unwrap_or(f64::NAN) * (q as f64).ln())
        .sum()
}

/// The exact entropy gap of the Shannon hard pair equals `(2l/n)·ln 2`.
pub fn shannon_gap_is_exact(n: usize, epsilon: f64) -> Result<bool> {
    let (p1, p2) = hard_pair_shannon(n, epsilon)?;
    let l = hard_shannon_pairs(n, epsilon);
    let gap = log_form_difference(&entropy_log_form(&p1), &entropy_log_form(&p2));
    let mut expected = LogLinear::new();
    let coeff = BigRational::new(BigInt::from(2 * l as u64), BigInt::from(n as u64));
    if !coeff.is_zero() {
        expected.insert(2, coeff);
    }
    Ok(gap == expected)
}

/// Pairs `(value, multiplicity)` of a table, sorted by value.
pub fn table_multiplicities(table: &[u32]) -> Vec<(u32, u64)> {
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for &v in table {
        *counts.entry(v).or_insert(0) += 1;
    }
    counts.into_iter().collect()
}

/// Whether `table` has exactly `l` values hit twice and every other value at most once.
pub fn has_exact_pairs(table: &[u32], l: usize) -> bool {
    let mult = table_multiplicities(table);
    mult.iter().all(|&(_, m)| m <= 2) && mult.iter().filter(|&&(_, m)| m == 2).count() == l
}
