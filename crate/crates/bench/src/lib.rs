//! Shared fixtures for the benchmarks.

use contagion_core::calibration::{allocate_populations, fit_zipf_frequencies, ZipfFitMethod};
use contagion_core::portfolio::EpisodeModel;
use contagion_core::sir::{allocate_initial_infected, initial_state};
use contagion_core::stochproc::BetaSeverity;
use contagion_core::{Firm, Subunit, ThetaSpec, TimeGrid, ZipfSpec};

pub const SIZE_COUNTS: [f64; 12] = [2263.0, 312.0, 138.0, 61.0, 38.0, 20.0, 13.0, 13.0, 11.0, 7.0, 4.0, 4.0];

pub fn zipf() -> ZipfSpec {
    fit_zipf_frequencies(&SIZE_COUNTS, ZipfFitMethod::Nls).expect("size law fit")
}

pub fn populations() -> Vec<f64> {
    let theta = ThetaSpec::reference();
    allocate_populations(theta.h_star, &zipf())
        .expect("populations")
        .iter()
        .map(|&h| h as f64)
        .collect()
}

pub fn episode_model(horizon_days: usize) -> EpisodeModel {
    let pops = populations();
    let infected = allocate_initial_infected(&pops, 49.0).expect("initial infected");
    EpisodeModel::new(
        ThetaSpec::reference().environment(pops.len()).expect("environment"),
        initial_state(&pops, &infected).expect("initial state"),
        pops,
        TimeGrid::daily(horizon_days).expect("grid"),
        BetaSeverity::new(50.0, 10.0).expect("severity"),
    )
    .expect("model")
}

/// `n_per_size` multi-unit firms of every size 2..=12.
pub fn portfolio(n_per_size: usize) -> Vec<Firm> {
    let sub = Subunit {
        z0: 6.5 / 365.0,
        drift: 4e-4,
        vol: 1.2e-2,
    };
    (2..=12)
        .flat_map(|k| (0..n_per_size).map(move |c| Firm::new(format!("k{k}-{c}"), "bench", vec![sub; k], 1.0).expect("firm")))
        .collect()
}
