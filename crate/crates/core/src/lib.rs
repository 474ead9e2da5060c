//! Simulation toolkit for quantum estimators of entropic quantities.
//!
//! Quantum subroutines are replaced by their exact output laws (amplitude
//! estimation) or by classical realizations of their statistical contracts
//! (mean estimation, k-distinctness), while a [`oracle::QueryLedger`] charges
//! the quantum query cost each step would have incurred.

pub mod distinctness;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod instances;
pub mod mean;
pub mod numeric;
pub mod oracle;
pub mod poisson;
pub mod quantum;

use rand::SeedableRng;

pub use distributions::RationalDistribution;
pub use error::{Error, Result};
pub use oracle::{DistributionOracle, Phase, QueryLedger};

/// Generator used for every simulated random choice.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
