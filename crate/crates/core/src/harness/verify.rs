//! Invariant suites behind the `verify` command. Each check reports the
//! smallest margin seen over its grid; a check passes iff that margin is
//! non-negative.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::distinctness::count_alpha_collisions;
use crate::distributions::RationalDistribution;
use crate::error::{invalid, Error, Result};
use crate::mean::{discrete_subroutine, qmean_multiplicative, EstimationMode, MeanConfig};
use crate::numeric::{binomial_f64, binomial_u128};
use crate::poisson::tail_margins;
use crate::quantum::{deviation_bound, measurement_law, EstAmpDistribution};
use crate::SimRng;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Distance from the failure boundary, in the check's own units.
    pub margin: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, margin: f64, detail: String) -> Self {
        Self { name: name.to_string(), passed: margin >= 0.0, margin, detail }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {} margin={:.3e} {}", self.name, self.margin, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Estamp,
    Sandwich,
    Poisson,
    Collision,
    Meanest,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "estamp" => Suite::Estamp,
            "sandwich" => Suite::Sandwich,
            "poisson" => Suite::Poisson,
            "collision" => Suite::Collision,
            "meanest" => Suite::Meanest,
            "all" => Suite::All,
            other => return Err(invalid(format!("unknown suite '{other}'"))),
        })
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    Ok(match suite {
        Suite::Estamp => estamp_checks(seed)?,
        Suite::Sandwich => sandwich_checks(seed, 1000),
        Suite::Poisson => poisson_checks(),
        Suite::Collision => collision_checks(seed, 100_000),
        Suite::Meanest => meanest_checks(seed, 1000)?,
        Suite::All => {
            let mut all = Vec::new();
            for s in [Suite::Estamp, Suite::Sandwich, Suite::Poisson, Suite::Collision, Suite::Meanest] {
                all.extend(run_suite(s, seed)?);
            }
            all
        }
    })
}

/// Budgets 2, 4, …, 256.
pub fn estamp_budgets() -> impl Iterator<Item = u64> {
    (1..=8).map(|k| 1u64 << k)
}

/// Normalization, confidence windows and the `y ↔ M − y` symmetry on
/// 200 seeded amplitudes per budget.
pub fn estamp_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = crate::rng(seed);
    let amplitudes: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
    let mut norm = f64::INFINITY;
    let mut window1 = f64::INFINITY;
    let mut window_k = f64::INFINITY;
    let mut symmetry = f64::INFINITY;
    for budget in estamp_budgets() {
        for &a in &amplitudes {
            let law = EstAmpDistribution::new(a, budget)?;
            norm = norm.min(1e-9 - (law.raw_mass() - 1.0).abs());
            window1 = window1.min(law.mass_within(deviation_bound(a, budget, 1)) - 8.0 / (PI * PI));
            for k in 2..=4u32 {
                let need = 1.0 - 1.0 / (2.0 * (k as f64 - 1.0));
                window_k = window_k.min(law.mass_within(deviation_bound(a, budget, k)) - need);
            }
            let raw = measurement_law(a, budget)?;
            let m = budget as usize;
            for y in 1..m {
                symmetry = symmetry.min(1e-12 - (raw[y] - raw[m - y]).abs());
            }
        }
    }
    let point = EstAmpDistribution::new(0.0, 64)?;
    let zero_mass = point.outcomes()[0].probability - 1.0;
    Ok(vec![
        Check::new("estamp/normalization", norm, "|raw mass - 1| <= 1e-9".into()),
        Check::new("estamp/window-k1", window1, "mass within k=1 window >= 8/pi^2".into()),
        Check::new("estamp/window-k2-4", window_k, "mass within k-window >= 1 - 1/(2(k-1))".into()),
        Check::new("estamp/symmetry", symmetry, "raw[y] = raw[M-y]".into()),
        Check::new("estamp/zero-amplitude", zero_mass, "a = 0 gives a point mass at 0".into()),
    ])
}

/// Random distribution with `1..=32` elements and counts in `0..=50`.
pub fn random_distribution(rng: &mut SimRng) -> RationalDistribution {
    let n = rng.random_range(1..=32usize);
    let mut counts: Vec<u64> = (0..n).map(|_| rng.random_range(0..=50u64)).collect();
    if counts.iter().all(|&c| c == 0) {
        counts[0] = 1;
    }
    RationalDistribution::from_counts(counts).expect("positive total")
}

/// Relative slack of both power-sum sandwich inequalities, minus `1e−12`
/// tolerance; negative means violated.
pub fn sandwich_slack(p: &RationalDistribution, a1: f64, a2: f64) -> (f64, f64) {
    let n = p.n() as f64;
    let r = a1 / a2;
    let low = p.power_sum(a2).powf(r);
    let mid = p.power_sum(a1);
    let high = n.powf(1.0 - r) * low;
    ((mid - low) / mid + 1e-12, (high - mid) / mid + 1e-12)
}

pub fn sandwich_checks(seed: u64, cases: usize) -> Vec<Check> {
    let mut rng = crate::rng(seed);
    let (mut lower, mut upper) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..cases {
        let p = random_distribution(&mut rng);
        let x: f64 = rng.random_range(0.2..5.0);
        let y: f64 = rng.random_range(0.2..5.0);
        let (a1, a2) = if x < y { (x, y) } else { (y, x) };
        let (l, u) = sandwich_slack(&p, a1, a2);
        lower = lower.min(l);
        upper = upper.min(u);
    }
    vec![
        Check::new("sandwich/lower", lower, format!("{cases} cases, P2^(a1/a2) <= P1")),
        Check::new("sandwich/upper", upper, format!("{cases} cases, P1 <= n^(1-a1/a2) P2^(a1/a2)")),
    ]
}

/// Universe sizes 16, 32, …, 1024.
pub fn poisson_grid() -> impl Iterator<Item = usize> {
    (4..=10).map(|k| 1usize << k)
}

pub fn poisson_checks() -> Vec<Check> {
    let (mut high, mut low) = (f64::INFINITY, f64::INFINITY);
    for n in poisson_grid() {
        for eps in [0.5, 1.0] {
            let (h, l) = tail_margins(n, eps);
            high = high.min(h);
            if n >= 64 {
                low = low.min(l);
            }
        }
    }
    vec![
        Check::new("poisson/above-threshold", high, "Pr[X >= t] - 0.15 at mu = t".into()),
        Check::new("poisson/below-threshold", low, "2/n^2 - Pr[X >= t] at mu = t/sqrt(1+eps), n >= 64".into()),
    ]
}

/// `(n, l, α)` grid of the collision statistics.
pub const COLLISION_GRID: [(usize, usize, u32); 3] = [(4, 3, 2), (8, 5, 2), (8, 6, 3)];

/// Counts `1, 2, …, n`.
pub fn collision_distribution(n: usize) -> RationalDistribution {
    RationalDistribution::from_counts((1..=n as u64).collect()).expect("positive total")
}

/// `Σ_tuples Π m_{s_j} · C(tuple)` against `C(l,α)·Σ m_i^α·S^{l−α}`, in
/// integers.
pub fn exact_collision_identity(p: &RationalDistribution, l: usize, alpha: u32) -> (u128, u128) {
    let n = p.n();
    let mut tuple = vec![0usize; l];
    let mut lhs: u128 = 0;
    loop {
        let weight: u128 = tuple.iter().map(|&i| p.count(i) as u128).product();
        lhs += weight * count_alpha_collisions(&tuple, alpha).value;
        // odometer increment
        let mut pos = 0;
        while pos < l {
            tuple[pos] += 1;
            if tuple[pos] < n {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
        if pos == l {
            break;
        }
    }
    let power: u128 = p.counts().iter().map(|&m| (m as u128).pow(alpha)).sum();
    let rhs = binomial_u128(l as u64, alpha as u64).unwrap() * power * (p.total() as u128).pow(l as u32 - alpha);
    (lhs, rhs)
}

/// α-subsets of equal positions, counted by enumerating position subsets.
pub fn brute_force_collisions(seq: &[usize], alpha: u32) -> u128 {
    assert!(seq.len() <= 20);
    let mut total = 0u128;
    for mask in 0u32..(1 << seq.len()) {
        if mask.count_ones() != alpha {
            continue;
        }
        let mut picked = (0..seq.len()).filter(|&j| mask >> j & 1 == 1).map(|j| seq[j]);
        let first = picked.next().expect("alpha >= 1");
        if picked.all(|v| v == first) {
            total += 1;
        }
    }
    total
}

pub fn collision_checks(seed: u64, sequences: usize) -> Vec<Check> {
    let mut rng = crate::rng(seed);
    let mut checks = Vec::new();
    for (n, l, alpha) in COLLISION_GRID {
        let p = collision_distribution(n);
        let oracle = crate::oracle::DistributionOracle::build(&p, seed);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut seq = vec![0usize; l];
        for _ in 0..sequences {
            for s in seq.iter_mut() {
                *s = oracle.draw(&mut rng);
            }
            let c = count_alpha_collisions(&seq, alpha).value as f64;
            sum += c;
            sum_sq += c * c;
        }
        let k = sequences as f64;
        let mean = sum / k;
        let se = ((sum_sq / k - mean * mean).max(0.0) / k).sqrt();
        let expected = binomial_f64(l as u64, alpha as u64) * p.power_sum(alpha as f64);
        checks.push(Check::new(
            &format!("collision/monte-carlo-n{n}-l{l}-a{alpha}"),
            5.0 * se - (mean - expected).abs(),
            format!("mean {mean:.5} vs {expected:.5}, se {se:.2e}"),
        ));
        let (lhs, rhs) = exact_collision_identity(&p, l, alpha);
        checks.push(Check::new(
            &format!("collision/exact-n{n}-l{l}-a{alpha}"),
            if lhs == rhs { 0.0 } else { -1.0 },
            format!("{lhs} vs {rhs}"),
        ));
    }
    let mut brute = 0.0;
    for _ in 0..300 {
        let len = rng.random_range(0..=12usize);
        let alphabet = rng.random_range(1..=4usize);
        let seq: Vec<usize> = (0..len).map(|_| rng.random_range(0..alphabet)).collect();
        for alpha in 2..=4 {
            if brute_force_collisions(&seq, alpha) != count_alpha_collisions(&seq, alpha).value {
                brute = -1.0;
            }
        }
    }
    checks.push(Check::new("collision/brute-force", brute, "300 sequences of length <= 12".into()));
    checks
}

/// Two-point law with mean `mean` and relative variance `rel_var`.
pub fn two_point_law(mean: f64, rel_var: f64) -> Vec<(f64, f64)> {
    let s = rel_var.sqrt();
    vec![(mean * (1.0 - s), 0.5), (mean * (1.0 + s), 0.5)]
}

/// Failure rate of the multiplicative estimator and the worst recombination
/// residual over `trials` runs.
pub fn multiplicative_trials(rel_var: f64, epsilon: f64, trials: usize, seed: u64) -> Result<(f64, f64)> {
    let (mean, a, b) = (1.0, 0.5, 2.0);
    let sigma = rel_var.sqrt();
    let cfg = MeanConfig::default();
    let mut rng = crate::rng(seed);
    let mut failures = 0usize;
    let mut residual = 0.0f64;
    for _ in 0..trials {
        let mut sub = discrete_subroutine(two_point_law(mean, rel_var));
        let run = qmean_multiplicative(&mut sub, sigma, a, b, epsilon, &cfg, EstimationMode::Contract, &mut rng)?;
        if (run.estimate.value - mean).abs() >= epsilon * mean {
            failures += 1;
        }
        let r = (run.estimate.value - run.recombined()).abs() / run.estimate.value.abs().max(1.0);
        residual = residual.max(r);
    }
    Ok((failures as f64 / trials as f64, residual))
}

pub fn meanest_checks(seed: u64, trials: usize) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (idx, rel_var) in [0.04, 0.25].into_iter().enumerate() {
        let (rate, residual) = multiplicative_trials(rel_var, 0.2, trials, seed.wrapping_add(idx as u64))?;
        let sd = (0.1 * 0.9 / trials as f64).sqrt();
        checks.push(Check::new(
            &format!("meanest/failure-rate-var{rel_var}"),
            0.1 + 3.0 * sd - rate,
            format!("{rate:.4} over {trials} trials"),
        ));
        checks.push(Check::new(
            &format!("meanest/recombination-var{rel_var}"),
            1e-12 - residual,
            format!("max relative residual {residual:.2e}"),
        ));
    }
    Ok(checks)
}
