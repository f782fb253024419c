//! Primitive samplers: exact CIR paths, geometric Brownian motion, Cox first jumps,
//! Beta severities.

mod cir;
mod cox;
mod gbm;
mod grid;
mod rng;
mod severity;

pub use cir::{sample_noncentral_chi2, simulate_cir, CirSpec};
pub use cox::{cox_first_jump, CumulativeHazard};
pub use gbm::{correlated_shocks, equicorrelated_normals, gbm_path};
pub use grid::TimeGrid;
pub use rng::RngStream;
pub use severity::{sample_severity, BetaSeverity};

/// `1 / (1 + e^-x)`, evaluated without overflow for large `|x|`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`logistic`].
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}
