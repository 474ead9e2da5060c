use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mean::{qmean_additive, Subroutine};
use crate::numeric::pow2_ceil;
use crate::oracle::{DistributionOracle, Phase};
use crate::quantum::{prime_floor, EstAmpDistribution};
use crate::SimRng;

use super::shannon::exact_variance;
use super::{EstimateReport, EstimatorConfig, ErrorMode};

/// Draw `i ~ p`, return `ln p̃_i − ln q̃_i` with both estimates from EstAmp′.
struct KlSubroutine<'a> {
    p: &'a mut DistributionOracle,
    q: &'a mut DistributionOracle,
    budget_p: u64,
    budget_q: u64,
    /// Per element: (ln-values of p̃ law, p̃ law, ln-values of q̃ law, q̃ law).
    laws: Vec<Option<ElementLaws>>,
}

#[derive(Clone)]
struct ElementLaws {
    law_p: Arc<EstAmpDistribution>,
    log_p: Arc<Vec<f64>>,
    law_q: Arc<EstAmpDistribution>,
    log_q: Arc<Vec<f64>>,
}

fn log_values(law: &EstAmpDistribution) -> Vec<f64> {
    let floor = prime_floor(law.budget());
    law.outcomes()
        .iter()
        .map(|o| if o.value == 0.0 { floor.ln() } else { o.value.ln() })
        .collect()
}

impl<'a> KlSubroutine<'a> {
    fn new(
        p: &'a mut DistributionOracle,
        q: &'a mut DistributionOracle,
        budget_p: u64,
        budget_q: u64,
    ) -> Result<Self> {
        let mut cache_p: BTreeMap<u64, (Arc<EstAmpDistribution>, Arc<Vec<f64>>)> = BTreeMap::new();
        let mut cache_q = cache_p.clone();
        let mut laws = Vec::with_capacity(p.n());
        for i in 0..p.n() {
            if p.source().count(i) == 0 {
                laws.push(None);
                continue;
            }
            let (law_p, log_p) = cached(&mut cache_p, p, i, budget_p)?;
            let (law_q, log_q) = cached(&mut cache_q, q, i, budget_q)?;
            laws.push(Some(ElementLaws { law_p, log_p, law_q, log_q }));
        }
        Ok(Self { p, q, budget_p, budget_q, laws })
    }
}

type LawEntry = (Arc<EstAmpDistribution>, Arc<Vec<f64>>);

fn cached(
    cache: &mut BTreeMap<u64, LawEntry>,
    oracle: &mut DistributionOracle,
    i: usize,
    budget: u64,
) -> Result<LawEntry> {
    let c = oracle.source().count(i);
    if let Some(e) = cache.get(&c) {
        return Ok(e.clone());
    }
    let law = oracle.estamp_law(i, budget)?;
    let logs = Arc::new(log_values(&law));
    cache.insert(c, (law.clone(), logs.clone()));
    Ok((law, logs))
}

impl Subroutine for KlSubroutine<'_> {
    fn execute(&mut self, rng: &mut SimRng) -> f64 {
        let i = self.p.draw(rng);
        let e = self.laws[i].as_ref().expect("sampled element has positive mass");
        let lp = e.log_p[e.law_p.sample_index(rng)];
        let lq = e.log_q[e.law_q.sample_index(rng)];
        lp - lq
    }

    fn charge(&mut self, executions: u64) {
        let lp = self.p.ledger_mut();
        lp.charge(Phase::Sample, executions);
        lp.charge(Phase::EstAmp, executions * self.budget_p);
        self.q.ledger_mut().charge(Phase::EstAmp, executions * self.budget_q);
    }

    fn record_classical(&mut self, executions: u64) {
        self.p.ledger_mut().add_classical(executions);
    }

    fn exact_law(&self) -> Option<Vec<(f64, f64)>> {
        let src = self.p.source();
        // group elements sharing both counts
        let mut groups: BTreeMap<(u64, u64), (f64, usize)> = BTreeMap::new();
        for (i, e) in self.laws.iter().enumerate() {
            if e.is_some() {
                let key = (src.count(i), self.q.source().count(i));
                let g = groups.entry(key).or_insert((0.0, i));
                g.0 += src.prob(i);
            }
        }
        let mut atoms = Vec::new();
        for (weight, i) in groups.into_values() {
            let e = self.laws[i].as_ref()?;
            for (op, lp) in e.law_p.outcomes().iter().zip(e.log_p.iter()) {
                if op.probability == 0.0 {
                    continue;
                }
                for (oq, lq) in e.law_q.outcomes().iter().zip(e.log_q.iter()) {
                    if oq.probability > 0.0 {
                        atoms.push((lp - lq, weight * op.probability * oq.probability));
                    }
                }
            }
        }
        Some(atoms)
    }
}

/// Additive-ε estimate of `D_KL(p‖q)` under the promise `p_i ≤ f·q_i`.
pub fn estimate_kl(
    p: &mut DistributionOracle,
    q: &mut DistributionOracle,
    f: f64,
    cfg: &EstimatorConfig,
) -> Result<EstimateReport> {
    cfg.check_epsilon(f64::INFINITY)?;
    if p.n() != q.n() {
        return Err(Error::SizeMismatch(p.n(), q.n()));
    }
    let ratio = p.source().max_ratio(q.source())?;
    if !(ratio <= f * (1.0 + 1e-12)) {
        return Err(Error::Promise(format!("p_i/q_i reaches {ratio}, above the bound f = {f}")));
    }
    let mut rng = crate::rng(cfg.seed);
    let n = p.n() as f64;
    let eps = cfg.epsilon;
    let scale = cfg.constants.kl_budget_scale;
    let budget_p = scale * pow2_ceil(n.sqrt() / eps).max(2);
    let budget_q = scale * pow2_ceil(n.sqrt() * f / eps).max(2);
    let sigma = (4.0 * n * f.max(1.0) / (eps * eps)).ln();
    let truth = p.source().kl_divergence(q.source())?;

    let p_label = p.label().to_string();
    let q_label = if q.label() == p_label { "q".to_string() } else { q.label().to_string() };
    let mut sub = KlSubroutine::new(p, q, budget_p, budget_q)?;
    let exact_var = exact_variance(&sub);
    let est = qmean_additive(&mut sub, sigma, eps / 2.0, &cfg.constants.mean, cfg.mode, &mut rng)?;

    let mut report = EstimateReport::new("kl", est.value, truth, ErrorMode::Additive, eps);
    report.in_contract = est.in_contract;
    report.extras.insert("budget_p".into(), budget_p as f64);
    report.extras.insert("budget_q".into(), budget_q as f64);
    report.extras.insert("f".into(), f);
    report.extras.insert("charged_executions".into(), est.charged_executions as f64);
    if exact_var > sigma * sigma {
        report.flag("variance-bound-exceeded");
    }
    report.ledgers.insert(p_label, p.take_ledger());
    report.ledgers.insert(q_label, q.take_ledger());
    Ok(report)
}
