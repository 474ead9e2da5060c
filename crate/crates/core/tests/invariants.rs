//! Property-based invariants over random distributions and parameters.

use proptest::prelude::*;

use qentropy::distinctness::count_alpha_collisions;
use qentropy::estimators::{estimate_shannon, estimate_support_coverage, EstimatorConfig};
use qentropy::harness::verify::sandwich_slack;
use qentropy::poisson::tail_at_least;
use qentropy::quantum::{grid_value, measurement_law, EstAmpDistribution};
use qentropy::{DistributionOracle, RationalDistribution};

fn counts() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..20, 1..24).prop_filter("positive total", |c| c.iter().any(|&x| x > 0))
}

fn full_support_counts(n: usize) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(1u64..20, n)
}

fn dist(c: Vec<u64>) -> RationalDistribution {
    RationalDistribution::from_counts(c).unwrap()
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn estamp_law_is_normalized_and_mirror_symmetric(a in 0.0f64..=1.0, k in 1u32..10) {
        let m = 1u64 << k;
        let raw = measurement_law(a, m).unwrap();
        prop_assert!((raw.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for y in 1..m as usize {
            prop_assert!((raw[y] - raw[m as usize - y]).abs() < 1e-12);
        }
        let law = EstAmpDistribution::new(a, m).unwrap();
        let total: f64 = law.outcomes().iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(law.outcomes().iter().all(|o| (0.0..=1.0).contains(&o.value) && o.probability >= 0.0));
        // a and 1 - a mirror each other across the grid
        let flip = EstAmpDistribution::new(1.0 - a, m).unwrap();
        let half = law.outcomes().len() - 1;
        for l in 0..=half {
            prop_assert!((law.outcomes()[l].probability - flip.outcomes()[half - l].probability).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_values_are_symmetric_and_bounded(k in 1u32..12, frac in 0.0f64..=1.0) {
        let m = 1u64 << k;
        let l = (frac * m as f64).round() as u64;
        let v = grid_value(l, m);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v, grid_value(m - l, m));
    }

    #[test]
    fn probabilities_sum_to_one_and_entropy_is_bounded(c in counts()) {
        let p = dist(c);
        prop_assert!((p.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let h = p.shannon_entropy();
        prop_assert!(h >= -1e-12);
        prop_assert!(h <= (p.support_size() as f64).ln() + 1e-12);
    }

    #[test]
    fn renyi_entropy_is_non_increasing_in_order(c in counts(), a in 0.05f64..6.0, b in 0.05f64..6.0) {
        let p = dist(c);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (h_lo, h_hi) = (p.renyi_entropy(lo), p.renyi_entropy(hi));
        prop_assert!(h_hi <= h_lo + 1e-9 * h_lo.abs().max(1.0), "H_{lo}={h_lo} < H_{hi}={h_hi}");
    }

    #[test]
    fn power_sum_sandwich_holds(c in counts(), a in 0.2f64..5.0, b in 0.2f64..5.0) {
        prop_assume!(a != b);
        let p = dist(c);
        let (a1, a2) = if a < b { (a, b) } else { (b, a) };
        let (lower, upper) = sandwich_slack(&p, a1, a2);
        prop_assert!(lower >= 0.0 && upper >= 0.0, "slack ({lower}, {upper})");
    }

    #[test]
    fn collision_count_matches_subset_enumeration(
        seq in prop::collection::vec(0usize..4, 0..11),
        alpha in 2u32..5,
    ) {
        let l = seq.len();
        let mut brute = 0u128;
        for mask in 0u32..(1 << l) {
            if mask.count_ones() != alpha {
                continue;
            }
            let picked: Vec<usize> = (0..l).filter(|&j| mask >> j & 1 == 1).map(|j| seq[j]).collect();
            if picked.iter().all(|&v| v == picked[0]) {
                brute += 1;
            }
        }
        let got = count_alpha_collisions(&seq, alpha);
        prop_assert_eq!(got.value, brute);
        prop_assert_eq!(got.sequence_length, l);
        let from_multiplicities: u128 =
            (0..4).map(|v| binomial(seq.iter().filter(|&&x| x == v).count() as u64, alpha as u64)).sum();
        prop_assert_eq!(got.value, from_multiplicities);
    }

    #[test]
    fn kl_divergence_is_non_negative(pc in full_support_counts(6), qc in full_support_counts(6)) {
        let (p, q) = (dist(pc), dist(qc));
        prop_assert!(p.kl_divergence(&q).unwrap() >= -1e-12);
        prop_assert!(p.kl_divergence(&p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn poisson_tail_grows_with_the_mean(mu in 0.0f64..60.0, extra in 0.0f64..10.0, k in 0u64..80) {
        let (a, b) = (tail_at_least(mu, k), tail_at_least(mu + extra, k));
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(a <= b + 1e-12);
        prop_assert!(tail_at_least(mu, k + 1) <= a + 1e-12);
    }

    #[test]
    fn oracle_preimages_match_probabilities(c in counts(), seed in any::<u64>()) {
        let p = dist(c);
        let oracle = DistributionOracle::build(&p, seed);
        prop_assert_eq!(oracle.table().len() as u64, p.total());
        for i in 0..p.n() {
            let hits = oracle.table().iter().filter(|&&v| v as usize == i).count() as u64;
            prop_assert_eq!(num_rational::Ratio::new(hits, p.total()), oracle.preimage_fraction(i));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn estimator_ledgers_are_conserved_and_seeded(c in full_support_counts(8), seed in any::<u64>()) {
        let p = dist(c);
        let cfg = EstimatorConfig::new(0.5, seed);
        let run = || {
            let mut oracle = DistributionOracle::build(&p, seed);
            estimate_shannon(&mut oracle, &cfg).unwrap()
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        let ledger = &a.ledgers["p"];
        prop_assert!(ledger.is_conserved());
        prop_assert!(ledger.quantum_queries() > 0);
        prop_assert_eq!(ledger.quantum_queries(), b.ledgers["p"].quantum_queries());

        let mut oracle = DistributionOracle::build(&p, seed);
        let cov = estimate_support_coverage(&mut oracle, 8, &EstimatorConfig::new(0.5, seed)).unwrap();
        prop_assert!(cov.ledgers["p"].is_conserved());
        prop_assert_eq!(
            cov.ledgers["p"].phases().values().sum::<u64>(),
            cov.ledgers["p"].quantum_queries()
        );
    }
}
