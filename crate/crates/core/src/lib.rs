//! Contagious cyber-episode simulation: stochastic multi-group SIR contagion with
//! CIR-driven coefficients, coupled to a subunit-level revenue model, producing
//! per-firm claims, portfolio loss distributions and aggregate exceedance curves.

pub mod calibration;
pub mod error;
pub mod firm;
pub mod portfolio;
pub mod sir;
pub mod stochproc;

pub use error::{Error, Result};
pub use firm::{Firm, InfectionRecord, Subunit, ZipfSpec};
pub use portfolio::{AepConfig, LossDistribution, ScenarioOutcome};
pub use sir::{SirParamsAt, SirState, SirTrajectory};
pub use stochproc::{CirSpec, RngStream, TimeGrid};
pub use calibration::{InfectionPanel, ThetaSpec};
