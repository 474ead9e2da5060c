//! Mean estimation in contract mode.
//!
//! The quantum mean estimators are treated as black boxes with a guarantee
//! and a cost. The simulation meets the guarantee with classical executions
//! of the subroutine and charges the ledger the quantum execution count.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::RationalDistribution;
use crate::error::{invalid, Error, Result};
use crate::numeric::median;
use crate::oracle::{DistributionOracle, Phase, QueryLedger};
use crate::quantum::{prime_floor, EstAmpDistribution};
use crate::SimRng;

/// A randomized procedure with real output, executed classically and
/// charged as if run quantumly.
pub trait Subroutine {
    /// One classical execution. Must not touch the ledger.
    fn execute(&mut self, rng: &mut SimRng) -> f64;

    /// Charge `executions` quantum executions to the owning ledger(s).
    fn charge(&mut self, executions: u64);

    /// Record classical executions actually performed.
    fn record_classical(&mut self, executions: u64);

    /// The exact finite law of one execution, when it can be enumerated.
    fn exact_law(&self) -> Option<Vec<(f64, f64)>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationMode {
    /// Classical executions meet the contract statistically.
    Contract,
    /// The exact mean of the subroutine is returned.
    Exact,
}

/// Hidden constants of the mean estimators.
#[derive(Debug, Clone, Serialize)]
pub struct MeanConfig {
    /// Multiplier on the quantum execution count.
    pub c_q: u64,
    /// Median-of-means groups in the additive estimator.
    pub groups: usize,
    /// Each group averages `group_factor·σ²/ε²` executions.
    pub group_factor: f64,
    /// Warm-up executions for the second-moment pilot.
    pub pilot_runs: usize,
    /// Safety multiplier on the pilot variance.
    pub pilot_safety: f64,
    /// Samples per unit of `variance/t²` in the bounded-second-moment step;
    /// 5.5 is the squared normal quantile for a two-sided 1/50 tail.
    pub tail_factor: f64,
    /// Upper limit on classical executions per call.
    pub max_classical: u64,
}

impl Default for MeanConfig {
    fn default() -> Self {
        Self {
            c_q: 1,
            groups: 3,
            group_factor: 4.0,
            pilot_runs: 64,
            pilot_safety: 2.0,
            tail_factor: 5.5,
            max_classical: 200_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub value: f64,
    /// Quantum executions charged per the cost formula.
    pub charged_executions: u64,
    /// Executions the simulation actually ran.
    pub classical_executions: u64,
    pub mode: EstimationMode,
    /// False when ε is outside the estimator's guaranteed range.
    pub in_contract: bool,
    /// True when the classical budget hit `max_classical`.
    pub capped: bool,
}

/// `⌈x·ln^{3/2}(x)·ln ln(x)⌉`, floored at 1.
pub fn mean_estimation_cost(x: f64) -> u64 {
    if !(x > std::f64::consts::E) {
        return 1;
    }
    let ln = x.ln();
    let v = x * ln.powf(1.5) * ln.ln();
    (v.ceil() as u64).max(1)
}

fn law_moments(law: &[(f64, f64)]) -> (f64, f64) {
    let mean: f64 = law.iter().map(|(v, p)| p * v).sum();
    let var: f64 = law.iter().map(|(v, p)| p * (v - mean) * (v - mean)).sum();
    (mean, var.max(0.0))
}

fn exact_mean(sub: &dyn Subroutine) -> Result<f64> {
    let law = sub
        .exact_law()
        .ok_or_else(|| invalid("exact mode needs an enumerable subroutine"))?;
    Ok(law_moments(&law).0)
}

/// Additive mean estimation: `|value − E[X]| < ε` with probability ≥ 4/5
/// given `Var[X] ≤ σ²`.
pub fn qmean_additive(
    sub: &mut dyn Subroutine,
    sigma: f64,
    epsilon: f64,
    cfg: &MeanConfig,
    mode: EstimationMode,
    rng: &mut SimRng,
) -> Result<MeanEstimate> {
    if !(epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let charged = if sigma > 0.0 {
        cfg.c_q * mean_estimation_cost(sigma / epsilon)
    } else {
        cfg.c_q
    };
    let in_contract = epsilon < 4.0 * sigma;
    let (value, classical, capped) = if sigma <= 0.0 {
        let (v, runs) = zero_variance_value(sub, cfg, mode, rng)?;
        (v, runs, false)
    } else if mode == EstimationMode::Exact {
        (exact_mean(sub)?, 0, false)
    } else {
        let want = (cfg.group_factor * sigma * sigma / (epsilon * epsilon)).ceil().max(1.0);
        let per_group_cap = (cfg.max_classical / cfg.groups as u64).max(1);
        let per_group = (want as u64).min(per_group_cap);
        let means: Vec<f64> = (0..cfg.groups).map(|_| streaming_mean(sub, per_group, rng)).collect();
        (median(&means), per_group * cfg.groups as u64, want as u64 > per_group)
    };
    sub.charge(charged);
    sub.record_classical(classical);
    Ok(MeanEstimate {
        value,
        charged_executions: charged,
        classical_executions: classical,
        mode,
        in_contract,
        capped,
    })
}

/// Mean of `runs ≥ 1` executions, offset by the first so constants are exact.
fn streaming_mean(sub: &mut dyn Subroutine, runs: u64, rng: &mut SimRng) -> f64 {
    let first = sub.execute(rng);
    let mut dev = 0.0;
    for _ in 1..runs {
        dev += sub.execute(rng) - first;
    }
    first + dev / runs as f64
}

/// σ ≤ 0 promises a constant subroutine; anything else is a violation.
fn zero_variance_value(
    sub: &mut dyn Subroutine,
    cfg: &MeanConfig,
    mode: EstimationMode,
    rng: &mut SimRng,
) -> Result<(f64, u64)> {
    if mode == EstimationMode::Exact {
        let law = sub
            .exact_law()
            .ok_or_else(|| invalid("exact mode needs an enumerable subroutine"))?;
        let (mean, var) = law_moments(&law);
        if var > 0.0 {
            return Err(Error::Contract(format!(
                "variance bound 0 declared but exact variance is {var}"
            )));
        }
        return Ok((mean, 0));
    }
    let runs = cfg.pilot_runs.max(2);
    let first = sub.execute(rng);
    for _ in 1..runs {
        let v = sub.execute(rng);
        if v != first {
            return Err(Error::Contract(format!(
                "variance bound 0 declared but the subroutine returned {first} and {v}"
            )));
        }
    }
    Ok((first, runs as u64))
}

/// Bounded-second-moment estimate: `|value − E[X]| < ε(√E[X²] + 1)²` with
/// probability ≥ 49/50.
pub fn second_moment_estimate(
    sub: &mut dyn Subroutine,
    epsilon: f64,
    cfg: &MeanConfig,
    mode: EstimationMode,
    rng: &mut SimRng,
) -> Result<MeanEstimate> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(invalid(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    let charged = cfg.c_q * mean_estimation_cost(1.0 / epsilon);
    let (value, classical, capped) = if mode == EstimationMode::Exact {
        (exact_mean(sub)?, 0, false)
    } else {
        let pilot: Vec<f64> = (0..cfg.pilot_runs.max(2)).map(|_| sub.execute(rng)).collect();
        let k = pilot.len() as f64;
        let second = pilot.iter().map(|v| v * v).sum::<f64>() / k;
        let mean = pilot.iter().sum::<f64>() / k;
        let var = (pilot.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0)).max(0.0);
        let tol = epsilon * (second.sqrt() + 1.0).powi(2);
        let want = (cfg.tail_factor * cfg.pilot_safety * var / (tol * tol)).ceil().max(1.0);
        let runs = (want as u64).min(cfg.max_classical);
        (streaming_mean(sub, runs, rng), runs + pilot.len() as u64, want as u64 > runs)
    };
    sub.charge(charged);
    sub.record_classical(classical);
    Ok(MeanEstimate {
        value,
        charged_executions: charged,
        classical_executions: classical,
        mode,
        in_contract: true,
        capped,
    })
}

/// Components of one multiplicative estimate. `value` equals
/// `scale·(m_tilde − 6·mu_minus + 6·mu_plus)` up to rounding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicativeRun {
    pub estimate: MeanEstimate,
    pub scale: f64,
    pub m_tilde: f64,
    pub mu_minus: f64,
    pub mu_plus: f64,
}

impl MultiplicativeRun {
    pub fn recombined(&self) -> f64 {
        self.scale * (self.m_tilde - 6.0 * self.mu_minus + 6.0 * self.mu_plus)
    }
}

/// One side of `X/(σb) − m̃`, divided by 6.
struct Part<'a> {
    inner: &'a mut dyn Subroutine,
    scale: f64,
    shift: f64,
    positive: bool,
}

impl Part<'_> {
    fn map(&self, x: f64) -> f64 {
        let centered = x / self.scale - self.shift;
        let side = if self.positive { centered.max(0.0) } else { (-centered).max(0.0) };
        side / 6.0
    }
}

impl Subroutine for Part<'_> {
    fn execute(&mut self, rng: &mut SimRng) -> f64 {
        let x = self.inner.execute(rng);
        self.map(x)
    }

    // the outer estimator charges the combined cost
    fn charge(&mut self, _executions: u64) {}

    fn record_classical(&mut self, _executions: u64) {}

    fn exact_law(&self) -> Option<Vec<(f64, f64)>> {
        let law = self.inner.exact_law()?;
        Some(law.into_iter().map(|(v, p)| (self.map(v), p)).collect())
    }
}

/// Multiplicative mean estimation given `E[X] ∈ [a, b]` and
/// `Var[X] ≤ σ²E[X]²`: `|value − E[X]| < εE[X]` with probability ≥ 9/10.
#[allow(clippy::too_many_arguments)]
pub fn qmean_multiplicative(
    sub: &mut dyn Subroutine,
    sigma: f64,
    a: f64,
    b: f64,
    epsilon: f64,
    cfg: &MeanConfig,
    mode: EstimationMode,
    rng: &mut SimRng,
) -> Result<MultiplicativeRun> {
    if !(a > 0.0) {
        return Err(invalid(format!("lower bound a must be positive, got {a}")));
    }
    if a > b {
        return Err(invalid(format!("bounds out of order: a = {a} > b = {b}")));
    }
    if !(sigma > 0.0 && epsilon > 0.0) {
        return Err(invalid("sigma and epsilon must be positive"));
    }
    let in_contract = epsilon < 24.0 * sigma;
    let scale = sigma * b;
    let first = sub.execute(rng);
    let m_tilde = first / scale;
    let inner_eps = (epsilon * a / (48.0 * scale)).min(0.49);

    let mut minus = Part { inner: &mut *sub, scale, shift: m_tilde, positive: false };
    let est_minus = second_moment_estimate(&mut minus, inner_eps, cfg, mode, rng)?;
    let mut plus = Part { inner: &mut *sub, scale, shift: m_tilde, positive: true };
    let est_plus = second_moment_estimate(&mut plus, inner_eps, cfg, mode, rng)?;

    let (mu_minus, mu_plus) = (est_minus.value, est_plus.value);
    // `first` equals scale·m̃ up to one rounding; using it keeps constants exact
    let value = first + scale * (6.0 * mu_plus - 6.0 * mu_minus);
    let charged = cfg.c_q * mean_estimation_cost(scale / (epsilon * a));
    let classical = 1 + est_minus.classical_executions + est_plus.classical_executions;
    sub.charge(charged);
    sub.record_classical(classical);
    Ok(MultiplicativeRun {
        estimate: MeanEstimate {
            value,
            charged_executions: charged,
            classical_executions: classical,
            mode,
            in_contract,
            capped: est_minus.capped || est_plus.capped,
        },
        scale,
        m_tilde,
        mu_minus,
        mu_plus,
    })
}

/// Payoff applied to an amplitude estimate in the master algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Payoff {
    Identity,
    /// `ln(1/x)`.
    LogInverse,
    /// `x^e`; zero maps to zero for `e > 0`.
    Power(f64),
    /// `(1 − (1 − x)^N)/x`, with `N` at `x = 0`.
    Coverage(u64),
}

impl Payoff {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Payoff::Identity => x,
            Payoff::LogInverse => -x.ln(),
            Payoff::Power(e) => {
                if x == 0.0 && e > 0.0 {
                    0.0
                } else {
                    x.powf(e)
                }
            }
            Payoff::Coverage(n) => {
                if x == 0.0 {
                    n as f64
                } else {
                    -((n as f64) * (-x).ln_1p()).exp_m1() / x
                }
            }
        }
    }
}

/// Whether zero estimates are lifted to `sin²(π/(2M))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EstAmpVariant {
    Plain,
    Prime,
}

/// Master-algorithm subroutine: draw `i ~ p`, estimate `p_i` with budget `M`,
/// apply a payoff.
#[derive(Debug, Clone)]
pub struct SubroutineSpec {
    pub distribution: RationalDistribution,
    pub budget: u64,
    pub payoff: Payoff,
    pub variant: EstAmpVariant,
}

/// One payoff table per distinct count.
#[derive(Debug, Clone)]
struct PayoffTable {
    weight: f64,
    law: Arc<EstAmpDistribution>,
    payoffs: Vec<f64>,
}

fn payoff_table(
    law: Arc<EstAmpDistribution>,
    weight: f64,
    payoff: Payoff,
    variant: EstAmpVariant,
) -> PayoffTable {
    let floor = prime_floor(law.budget());
    let payoffs = law
        .outcomes()
        .iter()
        .map(|o| {
            let v = if variant == EstAmpVariant::Prime && o.value == 0.0 { floor } else { o.value };
            payoff.eval(v)
        })
        .collect();
    PayoffTable { weight, law, payoffs }
}

impl SubroutineSpec {
    /// Exact law of one execution, one atom per (distinct count, grid value).
    pub fn law(&self) -> Result<Vec<(f64, f64)>> {
        let mut atoms = Vec::new();
        for t in self.tables()? {
            for (o, &v) in t.law.outcomes().iter().zip(&t.payoffs) {
                if o.probability > 0.0 {
                    atoms.push((v, t.weight * o.probability));
                }
            }
        }
        Ok(atoms)
    }

    fn tables(&self) -> Result<Vec<PayoffTable>> {
        let p = &self.distribution;
        let mut by_count = std::collections::BTreeMap::<u64, u64>::new();
        for &c in p.counts().iter().filter(|&&c| c > 0) {
            *by_count.entry(c).or_insert(0) += 1;
        }
        by_count
            .into_iter()
            .map(|(c, mult)| {
                let a = c as f64 / p.total() as f64;
                let law = Arc::new(EstAmpDistribution::new(a, self.budget)?);
                Ok(payoff_table(law, mult as f64 * a, self.payoff, self.variant))
            })
            .collect()
    }
}

/// Exact mean and variance of a master-algorithm subroutine.
pub fn exact_expectation(spec: &SubroutineSpec) -> Result<(f64, f64)> {
    Ok(law_moments(&spec.law()?))
}

/// [`SubroutineSpec`] bound to an oracle. Executions draw from the oracle
/// without charging; quantum executions are charged as one sample plus one
/// amplitude estimation of budget `M` each.
pub struct MasterSubroutine<'a> {
    oracle: &'a mut DistributionOracle,
    spec: SubroutineSpec,
    slot_of: Vec<usize>,
    tables: Vec<PayoffTable>,
}

impl<'a> MasterSubroutine<'a> {
    pub fn new(
        oracle: &'a mut DistributionOracle,
        budget: u64,
        payoff: Payoff,
        variant: EstAmpVariant,
    ) -> Result<Self> {
        let spec = SubroutineSpec {
            distribution: oracle.source().clone(),
            budget,
            payoff,
            variant,
        };
        let p = oracle.source().clone();
        let mut slot_of = vec![usize::MAX; p.n()];
        let mut tables: Vec<PayoffTable> = Vec::new();
        let mut slot_by_count = std::collections::BTreeMap::<u64, usize>::new();
        for i in 0..p.n() {
            let c = p.count(i);
            if c == 0 {
                continue;
            }
            let slot = match slot_by_count.get(&c) {
                Some(&s) => {
                    tables[s].weight += p.prob(i);
                    s
                }
                None => {
                    let law = oracle.estamp_law(i, budget)?;
                    tables.push(payoff_table(law, p.prob(i), payoff, variant));
                    slot_by_count.insert(c, tables.len() - 1);
                    tables.len() - 1
                }
            };
            slot_of[i] = slot;
        }
        Ok(Self { oracle, spec, slot_of, tables })
    }

    pub fn spec(&self) -> &SubroutineSpec {
        &self.spec
    }

    pub fn budget(&self) -> u64 {
        self.spec.budget
    }
}

impl Subroutine for MasterSubroutine<'_> {
    fn execute(&mut self, rng: &mut SimRng) -> f64 {
        let i = self.oracle.draw(rng);
        let t = &self.tables[self.slot_of[i]];
        t.payoffs[t.law.sample_index(rng)]
    }

    fn charge(&mut self, executions: u64) {
        let ledger: &mut QueryLedger = self.oracle.ledger_mut();
        ledger.charge(Phase::Sample, executions);
        ledger.charge(Phase::EstAmp, executions * self.spec.budget);
    }

    fn record_classical(&mut self, executions: u64) {
        self.oracle.ledger_mut().add_classical(executions);
    }

    fn exact_law(&self) -> Option<Vec<(f64, f64)>> {
        let mut atoms = Vec::new();
        for t in &self.tables {
            for (o, &v) in t.law.outcomes().iter().zip(&t.payoffs) {
                if o.probability > 0.0 {
                    atoms.push((v, t.weight * o.probability));
                }
            }
        }
        Some(atoms)
    }
}

/// Subroutine from a closure, charging a fixed number of queries per
/// execution under the "mean-estimation" phase of its own ledger.
pub struct FnSubroutine<F> {
    f: F,
    per_execution: u64,
    law: Option<Vec<(f64, f64)>>,
    pub ledger: QueryLedger,
}

impl<F: FnMut(&mut SimRng) -> f64> FnSubroutine<F> {
    pub fn new(f: F, per_execution: u64) -> Self {
        Self { f, per_execution, law: None, ledger: QueryLedger::new() }
    }

    /// Attach the exact law for exact mode.
    pub fn with_law(mut self, law: Vec<(f64, f64)>) -> Self {
        self.law = Some(law);
        self
    }
}

impl<F: FnMut(&mut SimRng) -> f64> Subroutine for FnSubroutine<F> {
    fn execute(&mut self, rng: &mut SimRng) -> f64 {
        (self.f)(rng)
    }

    fn charge(&mut self, executions: u64) {
        self.ledger.charge(Phase::MeanEstimation, executions * self.per_execution);
    }

    fn record_classical(&mut self, executions: u64) {
        self.ledger.add_classical(executions);
    }

    fn exact_law(&self) -> Option<Vec<(f64, f64)>> {
        self.law.clone()
    }
}

/// Subroutine drawing from a finite law.
pub fn discrete_subroutine(law: Vec<(f64, f64)>) -> FnSubroutine<impl FnMut(&mut SimRng) -> f64> {
    let values: Vec<f64> = law.iter().map(|(v, _)| *v).collect();
    let mut cumulative = Vec::with_capacity(law.len());
    let mut acc = 0.0;
    for (_, p) in &law {
        acc += p;
        cumulative.push(acc);
    }
    let total = acc;
    let f = move |rng: &mut SimRng| {
        let u: f64 = rng.random::<f64>() * total;
        let idx = cumulative.partition_point(|&c| c <= u).min(values.len() - 1);
        values[idx]
    };
    FnSubroutine::new(f, 1).with_law(law)
}
