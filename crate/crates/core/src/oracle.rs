//! Sampling oracles `O_p: [S] → [n]` and the query ledger that charges them.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::distributions::RationalDistribution;
use crate::error::Result;
use crate::quantum::EstAmpDistribution;
use crate::SimRng;

/// Ledger phase labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Sample,
    EstAmp,
    Distinctness,
    MeanEstimation,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Sample => "sample",
            Phase::EstAmp => "estamp",
            Phase::Distinctness => "distinctness",
            Phase::MeanEstimation => "mean-estimation",
        }
    }
}

impl Serialize for Phase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChargeRecord {
    pub phase: Phase,
    pub queries: u64,
}

/// Quantum queries charged to one oracle, plus classical work done on its
/// behalf. Consecutive charges to the same phase are coalesced into one record.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct QueryLedger {
    phases: BTreeMap<Phase, u64>,
    classical_executions: u64,
    records: Vec<ChargeRecord>,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, phase: Phase, queries: u64) {
        let slot = self.phases.entry(phase).or_insert(0);
        *slot = slot.checked_add(queries).expect("query counter overflow");
        match self.records.last_mut() {
            Some(last) if last.phase == phase => last.queries += queries,
            _ => self.records.push(ChargeRecord { phase, queries }),
        }
    }

    pub fn add_classical(&mut self, executions: u64) {
        self.classical_executions += executions;
    }

    pub fn quantum_queries(&self) -> u64 {
        self.phases.values().sum()
    }

    pub fn phase(&self, phase: Phase) -> u64 {
        self.phases.get(&phase).copied().unwrap_or(0)
    }

    pub fn phases(&self) -> &BTreeMap<Phase, u64> {
        &self.phases
    }

    pub fn records(&self) -> &[ChargeRecord] {
        &self.records
    }

    pub fn classical_executions(&self) -> u64 {
        self.classical_executions
    }

    /// Total equals the sum of the per-phase records.
    pub fn is_conserved(&self) -> bool {
        self.records.iter().map(|r| r.queries).sum::<u64>() == self.quantum_queries()
    }

    /// Summation merge, used to aggregate across trials.
    pub fn merge(&mut self, other: &QueryLedger) {
        for r in &other.records {
            self.charge(r.phase, r.queries);
        }
        self.classical_executions += other.classical_executions;
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "quantum_queries": self.quantum_queries(),
            "classical_executions": self.classical_executions,
            "phases": self.phases.iter().map(|(p, q)| (p.label(), *q)).collect::<BTreeMap<_, _>>(),
        })
    }
}

/// A table realization of a rational distribution: exactly `m_i` of the `S`
/// entries map to element `i`.
#[derive(Debug, Clone)]
pub struct DistributionOracle {
    label: String,
    table: Vec<u32>,
    source: RationalDistribution,
    ledger: QueryLedger,
    laws: HashMap<(u64, u64), Arc<EstAmpDistribution>>,
}

impl DistributionOracle {
    /// Canonical sorted table shuffled by a seeded permutation.
    pub fn build(p: &RationalDistribution, shuffle_seed: u64) -> Self {
        assert!(p.n() <= u32::MAX as usize, "universe too large for the table");
        let mut table = Vec::with_capacity(p.total() as usize);
        for (i, &c) in p.counts().iter().enumerate() {
            table.extend(std::iter::repeat_n(i as u32, c as usize));
        }
        let mut rng = SimRng::seed_from_u64(shuffle_seed);
        table.shuffle(&mut rng);
        Self::from_parts("p", table, p.clone())
    }

    fn from_parts(label: &str, table: Vec<u32>, source: RationalDistribution) -> Self {
        Self {
            label: label.to_string(),
            table,
            source,
            ledger: QueryLedger::new(),
            laws: HashMap::new(),
        }
    }

    /// Rename the oracle identity used in reports (e.g. "p", "q").
    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    /// `O'(s + S·l) = O(s)` for `l < k`: the same distribution over denominator `k·S`.
    pub fn replicate(&self, k: u64) -> Result<Self> {
        assert!(k >= 1, "replication factor must be positive");
        let mut table = Vec::with_capacity(self.table.len() * k as usize);
        for _ in 0..k {
            table.extend_from_slice(&self.table);
        }
        let counts = self.source.counts().iter().map(|&c| c * k).collect();
        let source = RationalDistribution::new(counts, self.source.total() * k)?;
        Ok(Self::from_parts(&self.label, table, source))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    pub fn source(&self) -> &RationalDistribution {
        &self.source
    }

    pub fn n(&self) -> usize {
        self.source.n()
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut QueryLedger {
        &mut self.ledger
    }

    pub fn take_ledger(&mut self) -> QueryLedger {
        std::mem::take(&mut self.ledger)
    }

    /// One quantum-model sample, charged 1 query.
    pub fn sample(&mut self, rng: &mut SimRng) -> usize {
        self.ledger.charge(Phase::Sample, 1);
        self.draw(rng)
    }

    /// `table[s]` for uniform `s`, with no charge. Used where the caller
    /// accounts for the queries itself.
    pub fn draw(&self, rng: &mut SimRng) -> usize {
        let s = rng.random_range(0..self.table.len());
        self.table[s] as usize
    }

    /// `m_i / S`, never charged.
    pub fn preimage_fraction(&self, i: usize) -> Ratio<u64> {
        self.source.prob_exact(i)
    }

    /// Output law of amplitude estimation for element `i`, memoized by
    /// (count, budget) since equal counts share a law.
    pub fn estamp_law(&mut self, i: usize, budget: u64) -> Result<Arc<EstAmpDistribution>> {
        let key = (self.source.count(i), budget);
        if let Some(law) = self.laws.get(&key) {
            return Ok(Arc::clone(law));
        }
        let law = Arc::new(EstAmpDistribution::new(self.source.prob(i), budget)?);
        self.laws.insert(key, Arc::clone(&law));
        Ok(law)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preimage_sizes(o: &DistributionOracle) -> Vec<u64> {
        let mut sizes = vec![0u64; o.n()];
        for &v in o.table() {
            sizes[v as usize] += 1;
        }
        sizes
    }

    #[test]
    fn table_preimages_match_counts() {
        let p = RationalDistribution::from_counts(vec![1, 3]).unwrap();
        let a = DistributionOracle::build(&p, 1);
        let b = DistributionOracle::build(&p, 2);
        assert_eq!(preimage_sizes(&a), vec![1, 3]);
        assert_eq!(preimage_sizes(&b), vec![1, 3]);
        let point = RationalDistribution::new(vec![4, 0], 4).unwrap();
        assert_eq!(DistributionOracle::build(&point, 9).table(), &[0, 0, 0, 0]);
    }

    #[test]
    fn build_is_deterministic() {
        let p = RationalDistribution::from_counts(vec![3, 1, 4, 1, 5]).unwrap();
        assert_eq!(
            DistributionOracle::build(&p, 42).table(),
            DistributionOracle::build(&p, 42).table()
        );
    }

    #[test]
    fn sampling_charges_one_each() {
        let p = RationalDistribution::new(vec![2, 0, 0], 2).unwrap();
        let mut o = DistributionOracle::build(&p, 0);
        let mut rng = crate::rng(3);
        assert_eq!(o.sample(&mut rng), 0);
        assert_eq!(o.sample(&mut rng), 0);
        assert_eq!(o.ledger().quantum_queries(), 2);
        assert_eq!(o.ledger().phase(Phase::Sample), 2);
        let _ = o.draw(&mut rng);
        assert_eq!(o.ledger().quantum_queries(), 2);
    }

    #[test]
    fn preimage_fraction_is_uncharged() {
        let p = RationalDistribution::from_counts(vec![1, 3, 0]).unwrap();
        let o = DistributionOracle::build(&p, 0);
        assert_eq!(o.preimage_fraction(1), Ratio::new(3, 4));
        assert_eq!(o.preimage_fraction(2), Ratio::new(0, 1));
        let total: Ratio<u64> = (0..3).map(|i| o.preimage_fraction(i)).sum();
        assert_eq!(total, Ratio::new(1, 1));
        assert_eq!(o.ledger().quantum_queries(), 0);
    }

    #[test]
    fn replicate_repeats_table() {
        let p = RationalDistribution::from_counts(vec![1, 2]).unwrap();
        let o = DistributionOracle::build(&p, 5);
        let r = o.replicate(3).unwrap();
        let s = o.table().len();
        assert_eq!(r.table().len(), 3 * s);
        for (idx, &v) in r.table().iter().enumerate() {
            assert_eq!(v, o.table()[idx % s]);
        }
        assert_eq!(r.preimage_fraction(1), o.preimage_fraction(1));
    }

    #[test]
    fn ledger_records_coalesce_and_conserve() {
        let mut l = QueryLedger::new();
        l.charge(Phase::Sample, 1);
        l.charge(Phase::Sample, 1);
        l.charge(Phase::EstAmp, 8);
        l.charge(Phase::Sample, 1);
        assert_eq!(l.records().len(), 3);
        assert_eq!(l.quantum_queries(), 11);
        assert!(l.is_conserved());
        let mut m = QueryLedger::new();
        m.merge(&l);
        m.merge(&l);
        assert_eq!(m.phase(Phase::EstAmp), 16);
        assert!(m.is_conserved());
    }
}
