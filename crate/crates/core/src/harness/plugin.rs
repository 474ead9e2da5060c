use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::distributions::RationalDistribution;
use crate::error::{invalid, Error, Result};
use crate::estimators::{EstimateReport, ErrorMode};
use crate::oracle::DistributionOracle;
use crate::SimRng;

/// Functional computed by the plug-in baseline and the `exact` command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    Shannon,
    Renyi(f64),
    PowerSum(f64),
    MinEntropy,
    SupportSize,
    Coverage(u64),
    Kl,
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (head, arg) = match text.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (text, None),
        };
        let number = |what: &str| -> Result<f64> {
            let raw = arg.ok_or_else(|| invalid(format!("measure '{head}' needs a {what}, e.g. {head}:2")))?;
            match raw {
                "inf" | "infinity" => Ok(f64::INFINITY),
                _ => raw.parse().map_err(|_| invalid(format!("bad {what} '{raw}' in measure '{text}'"))),
            }
        };
        Ok(match head {
            "shannon" => Measure::Shannon,
            "renyi" => Measure::Renyi(number("order")?),
            "power-sum" => Measure::PowerSum(number("order")?),
            "min-entropy" => Measure::MinEntropy,
            "support-size" => Measure::SupportSize,
            "coverage" => Measure::Coverage(number("sample count")? as u64),
            "kl" => Measure::Kl,
            other => return Err(invalid(format!("unknown measure '{other}'"))),
        })
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::Shannon => write!(f, "shannon"),
            Measure::Renyi(a) => write!(f, "renyi:{a}"),
            Measure::PowerSum(a) => write!(f, "power-sum:{a}"),
            Measure::MinEntropy => write!(f, "min-entropy"),
            Measure::SupportSize => write!(f, "support-size"),
            Measure::Coverage(n) => write!(f, "coverage:{n}"),
            Measure::Kl => write!(f, "kl"),
        }
    }
}

impl Measure {
    /// Exact value on `p`; KL needs `q`.
    pub fn evaluate(&self, p: &RationalDistribution, q: Option<&RationalDistribution>) -> Result<f64> {
        Ok(match *self {
            Measure::Shannon => p.shannon_entropy(),
            Measure::Renyi(a) => p.renyi_entropy(a),
            Measure::PowerSum(a) => p.power_sum(a),
            Measure::MinEntropy => p.renyi_entropy(f64::INFINITY),
            Measure::SupportSize => p.support_size() as f64,
            Measure::Coverage(n) => p.support_coverage(n),
            Measure::Kl => p.kl_divergence(q.ok_or_else(|| invalid("kl needs a second distribution"))?)?,
        })
    }
}

fn empirical(oracle: &mut DistributionOracle, n_samples: u64, rng: &mut SimRng) -> Result<RationalDistribution> {
    let mut counts = vec![0u64; oracle.n()];
    for _ in 0..n_samples {
        counts[oracle.draw(rng)] += 1;
    }
    oracle.ledger_mut().add_classical(n_samples);
    RationalDistribution::new(counts, n_samples)
}

/// Plug-in estimate: the functional of the empirical distribution of
/// `n_samples` classical draws, scored additively against the truth.
pub fn classical_plugin_baseline(
    oracle: &mut DistributionOracle,
    measure: Measure,
    n_samples: u64,
    epsilon: f64,
    rng: &mut SimRng,
) -> Result<EstimateReport> {
    if n_samples == 0 {
        return Err(invalid("plug-in baseline needs at least one sample"));
    }
    if measure == Measure::Kl {
        return Err(invalid("use plugin_kl for the divergence"));
    }
    let hat = empirical(oracle, n_samples, rng)?;
    let estimate = measure.evaluate(&hat, None)?;
    let truth = measure.evaluate(oracle.source(), None)?;
    let mut report = EstimateReport::new("plugin", estimate, truth, ErrorMode::Additive, epsilon);
    report.extras.insert("n_samples".into(), n_samples as f64);
    if let Measure::Renyi(a) | Measure::PowerSum(a) = measure {
        report.alpha = Some(a);
    }
    report.attach_ledger(oracle);
    Ok(report)
}

/// Plug-in KL divergence; undefined (NaN, flagged) when some symbol seen
/// under `p` never appears under `q`.
pub fn plugin_kl(
    p: &mut DistributionOracle,
    q: &mut DistributionOracle,
    n_samples: u64,
    epsilon: f64,
    rng: &mut SimRng,
) -> Result<EstimateReport> {
    if n_samples == 0 {
        return Err(invalid("plug-in baseline needs at least one sample"));
    }
    let p_hat = empirical(p, n_samples, rng)?;
    let q_hat = empirical(q, n_samples, rng)?;
    let truth = p.source().kl_divergence(q.source())?;
    let (estimate, undefined) = match p_hat.kl_divergence(&q_hat) {
        Ok(v) => (v, false),
        Err(Error::AbsoluteContinuity { .. }) => (f64::NAN, true),
        Err(e) => return Err(e),
    };
    let mut report = EstimateReport::new("plugin", estimate, truth, ErrorMode::Additive, epsilon);
    report.extras.insert("n_samples".into(), n_samples as f64);
    if undefined {
        report.flag("undefined");
    }
    report.attach_ledger(p);
    report.attach_ledger(q);
    Ok(report)
}
