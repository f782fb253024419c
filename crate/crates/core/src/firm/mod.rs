//! Firms and their subunits: size law, infection times, revenue under attack and
//! claims.

pub(crate) mod claims;
pub(crate) mod infection;
pub(crate) mod quadrature;
mod types;
mod zipf;

pub use claims::{
    conditional_expected_claim, expected_episode_claim, instantaneous_claim, period_claim, subunit_revenue,
};
pub use infection::{marginal_cdf_tau, simulate_infection_times, MarginalTau};
pub use types::{Firm, InfectionRecord, InfectionSource, Subunit};
pub use zipf::{sample_firm_sizes, ZipfSpec};
