//! Aggregation of firm claims into loss distributions, expected output and aggregate
//! exceedance curves.

mod aep;
mod distribution;
mod scenario;

pub use aep::{aep_approx, aep_bootstrap, aep_exact, episode_stream, poisson_frequencies, AepConfig, AepResult};
pub use distribution::{distribution_summary, empirical_cdf, DistributionSummary, LossDistribution};
pub use scenario::{
    approx_episode_loss, episode_loss, expected_output, run_scenarios, simulate_scenario, EpisodeModel,
    ScenarioOutcome,
};
