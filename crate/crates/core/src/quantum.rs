//! Closed-form amplitude estimation.
//!
//! For amplitude `a = sin²(ωπ)` and budget `M`, a measurement outcome
//! `y ∈ {0..M-1}` is observed with probability
//! `½·[F(ω − y/M) + F(ω + y/M)]` where `F(Δ) = sin²(MΔπ) / (M² sin²(Δπ))`
//! (the two eigenphases `±ω` of the Grover iterate contribute equally). The
//! reported estimate is `sin²(yπ/M)`, so `y` and `M − y` merge onto grid
//! index `min(y, M − y)`.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::is_power_of_two;
use crate::oracle::{DistributionOracle, Phase};
use crate::SimRng;

/// Offsets below this are treated as an exact hit (probability one).
const COINCIDENCE_TOL: f64 = 1e-14;
/// Allowed deviation of the raw mass from one before renormalizing.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// `sin²(lπ/M)`, exact at the quarter points.
pub fn grid_value(l: u64, budget: u64) -> f64 {
    assert!(l <= budget, "grid index out of range");
    let l = l.min(budget - l);
    if l == 0 {
        0.0
    } else if 2 * l == budget {
        1.0
    } else if 4 * l == budget {
        0.5
    } else {
        let s = (l as f64 * PI / budget as f64).sin();
        s * s
    }
}

/// Value EstAmp′ reports in place of 0: `sin²(π/(2M))`.
pub fn prime_floor(budget: u64) -> f64 {
    let s = (PI / (2.0 * budget as f64)).sin();
    s * s
}

/// Half-width of the k-th confidence window: `2πk√(a(1−a))/M + k²π²/M²`.
pub fn deviation_bound(a: f64, budget: u64, k: u32) -> f64 {
    let m = budget as f64;
    let k = k as f64;
    2.0 * PI * k * (a * (1.0 - a)).sqrt() / m + k * k * PI * PI / (m * m)
}

/// Smallest power-of-two budget whose first window is within `ε·p_floor`
/// for every `a ≥ p_floor`.
pub fn multiplicative_budget(epsilon: f64, p_floor: f64) -> u64 {
    assert!(epsilon > 0.0 && p_floor > 0.0);
    let mut m: u64 = 2;
    loop {
        let mf = m as f64;
        if 2.0 * PI * p_floor.sqrt() / mf + PI * PI / (mf * mf) <= epsilon * p_floor {
            return m;
        }
        m = m.checked_mul(2).expect("multiplicative budget overflow");
    }
}

/// Fejér kernel at circular offset `u / M`, where `u = Mω − y` in grid units.
fn fejer(u: f64, m: f64) -> f64 {
    let wrapped = u - m * (u / m).round();
    if (wrapped / m).abs() < COINCIDENCE_TOL {
        return 1.0;
    }
    // sin²(π·wrapped) has period 1 in wrapped, reduce before evaluating
    let num = (PI * (wrapped - wrapped.round())).sin();
    let den = (PI * wrapped / m).sin();
    (num * num) / (m * m * den * den)
}

/// Measurement law over `y ∈ {0..M-1}` before merging.
pub fn measurement_law(a: f64, budget: u64) -> Result<Vec<f64>> {
    check_inputs(a, budget)?;
    let mut law = vec![0.0; budget as usize];
    if a == 0.0 {
        law[0] = 1.0;
        return Ok(law);
    }
    let m = budget as f64;
    let scaled = omega_of(a) * m;
    for (y, slot) in law.iter_mut().enumerate() {
        let y = y as f64;
        *slot = 0.5 * (fejer(scaled - y, m) + fejer(scaled + y, m));
    }
    Ok(law)
}

fn omega_of(a: f64) -> f64 {
    a.sqrt().asin() / PI
}

fn check_inputs(a: f64, budget: u64) -> Result<()> {
    if budget < 2 || !is_power_of_two(budget) {
        return Err(Error::BadBudget(budget));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidParameter(format!("amplitude {a} outside [0, 1]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Outcome {
    pub value: f64,
    pub probability: f64,
}

/// Exact output law of amplitude estimation on the grid `l = 0..=M/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstAmpDistribution {
    budget: u64,
    amplitude: f64,
    omega: f64,
    outcomes: Vec<Outcome>,
    raw_mass: f64,
    cumulative: Vec<f64>,
}

impl EstAmpDistribution {
    pub fn new(a: f64, budget: u64) -> Result<Self> {
        let law = measurement_law(a, budget)?;
        let half = (budget / 2) as usize;
        let mut mass = vec![0.0; half + 1];
        for (y, p) in law.iter().enumerate() {
            let l = y.min(budget as usize - y);
            mass[l] += p;
        }
        let raw_mass: f64 = crate::numeric::compensated_sum(mass.iter().copied());
        if (raw_mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Contract(format!(
                "amplitude-estimation law for a={a}, M={budget} has mass {raw_mass}"
            )));
        }
        let outcomes: Vec<Outcome> = mass
            .iter()
            .enumerate()
            .map(|(l, p)| Outcome {
                value: grid_value(l as u64, budget),
                probability: p / raw_mass,
            })
            .collect();
        let mut cumulative = Vec::with_capacity(outcomes.len());
        let mut acc = 0.0;
        for o in &outcomes {
            acc += o.probability;
            cumulative.push(acc);
        }
        *cumulative.last_mut().expect("non-empty grid") = 1.0;
        Ok(Self {
            budget,
            amplitude: a,
            omega: omega_of(a),
            outcomes,
            raw_mass,
            cumulative,
        })
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Grid entries `l = 0..=M/2`, zero-probability entries included.
    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    /// Total probability before renormalization.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    /// Probability mass on estimates within `width` of the true amplitude.
    pub fn mass_within(&self, width: f64) -> f64 {
        self.outcomes
            .iter()
            .filter(|o| (o.value - self.amplitude).abs() <= width)
            .map(|o| o.probability)
            .sum()
    }

    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.outcomes
            .iter()
            .filter(|o| o.probability > 0.0)
            .map(|o| o.probability * f(o.value))
            .sum()
    }

    /// Inverse-CDF draw of a grid index.
    pub fn sample_index(&self, rng: &mut SimRng) -> usize {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u).min(self.outcomes.len() - 1)
    }

    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        self.outcomes[self.sample_index(rng)].value
    }

    /// Draw with the EstAmp′ convention (0 reported as `sin²(π/(2M))`).
    pub fn sample_prime(&self, rng: &mut SimRng) -> f64 {
        let v = self.sample(rng);
        if v == 0.0 {
            prime_floor(self.budget)
        } else {
            v
        }
    }

    /// `value,probability` rows.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["value", "probability"]).expect("in-memory write");
        for o in &self.outcomes {
            w.serialize((o.value, o.probability)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
    }
}

/// One amplitude-estimation draw for `p_i`, charged `M` queries.
pub fn estamp_sample(
    oracle: &mut DistributionOracle,
    i: usize,
    budget: u64,
    rng: &mut SimRng,
) -> Result<f64> {
    let law = oracle.estamp_law(i, budget)?;
    oracle.ledger_mut().charge(Phase::EstAmp, budget);
    Ok(law.sample(rng))
}

/// EstAmp′ draw: as [`estamp_sample`] with 0 mapped to `sin²(π/(2M))`.
pub fn estamp_prime_sample(
    oracle: &mut DistributionOracle,
    i: usize,
    budget: u64,
    rng: &mut SimRng,
) -> Result<f64> {
    let law = oracle.estamp_law(i, budget)?;
    oracle.ledger_mut().charge(Phase::EstAmp, budget);
    Ok(law.sample_prime(rng))
}

/// Estimate `p_i` to relative error `ε` (with the first-window probability),
/// given a lower bound `p_floor ≤ p_i`. Returns the estimate and the budget used.
pub fn estamp_multiplicative(
    oracle: &mut DistributionOracle,
    i: usize,
    epsilon: f64,
    p_floor: f64,
    rng: &mut SimRng,
) -> Result<(f64, u64)> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside (0, 1]")));
    }
    if !(p_floor > 0.0 && p_floor <= 1.0) {
        return Err(Error::InvalidParameter(format!("p_floor {p_floor} outside (0, 1]")));
    }
    let budget = multiplicative_budget(epsilon, p_floor);
    Ok((estamp_sample(oracle, i, budget, rng)?, budget))
}
