//! Parameter estimation: firm-size law, firm proxies, revenue coefficients, initial
//! populations and the forward-simulation fit of the contagion coefficients.

mod fit;
mod nelder_mead;
mod objective;
mod panel;
mod proxies;
mod theta;
mod zipf_fit;

pub use fit::{calibrate, PARAMETER_NAMES, CalibrationBounds, CalibrationConfig, CalibrationResult, StartResult};
pub use nelder_mead::{nelder_mead, nelder_mead_with, NelderMeadOptions, NelderMeadResult};
pub use objective::{objective_j2, objective_mean_path, ObjectiveConfig, PanelSemantics};
pub use panel::{infection_proxy, InfectionPanel, ProxyAllocation, SectorSizeTable};
pub use proxies::{build_firm_proxy, estimate_bs, BsEstimate, FirmRevenue, SIGMA_FLOOR};
pub use theta::{allocate_populations, allocate_populations_with, population_weights, AllocationRule, ThetaSpec};
pub use zipf_fit::{fit_zipf, fit_zipf_frequencies, fit_zipf_with, size_frequencies, ZipfFitMethod};

pub use crate::sir::scale_rates;
