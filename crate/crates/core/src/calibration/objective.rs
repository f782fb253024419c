use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::panel::InfectionPanel;
use super::theta::{allocate_populations_with, population_weights, AllocationRule, ThetaSpec};
use crate::error::{Error, Result};
use crate::firm::ZipfSpec;
use crate::sir::{harmonic, initial_state, simulate_sir_substeps, EnvironmentSpec, ParameterPaths, SirState};
use crate::stochproc::{RngStream, TimeGrid};

/// What the panel counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelSemantics {
    /// Firms infected on that day.
    #[default]
    CurrentlyInfected,
    /// Newly reported firms; turned into current counts by keeping each report
    /// for the size's mean recovery time `H_k / γ1`.
    NewInfections,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub scenarios: usize,
    /// Fixed count scale so values are comparable across `h⋆`.
    pub h_ref: f64,
    pub semantics: PanelSemantics,
    pub substeps: usize,
    pub allocation: AllocationRule,
    /// Use unrounded firm counts, which keeps the objective continuous in `h⋆`.
    pub smooth_populations: bool,
    pub seed: u64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            scenarios: 100,
            h_ref: 10_000.0,
            semantics: PanelSemantics::default(),
            substeps: 1,
            allocation: AllocationRule::default(),
            smooth_populations: true,
            seed: 0,
        }
    }
}

/// Mean over scenarios of `Σ_k Σ_u ((obs_k(u) - h I_k(u)) / h_ref)²`. Scenario `m`
/// always draws from the same stream, so nearby coefficients see common noise.
pub fn objective_j2(theta: &ThetaSpec, panel: &InfectionPanel, zipf: &ZipfSpec, cfg: &ObjectiveConfig) -> Result<f64> {
    let fit = Fit::new(theta, panel, zipf, cfg)?;
    if cfg.scenarios == 0 {
        return Err(Error::invalid("scenarios", "must be >= 1"));
    }
    let master = RngStream::master(cfg.seed);
    let per_scenario = (0..cfg.scenarios)
        .into_par_iter()
        .map(|m| fit.error(&fit.env.simulate(&fit.grid, master.stream(m as u64))))
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_scenario.iter().sum::<f64>() / cfg.scenarios as f64)
}

/// The same squared error for the single trajectory driven by the CIR means, i.e. the
/// zero-volatility limit. Deterministic and `scenarios` times cheaper; `κ` and `Σ` do
/// not enter since every coefficient starts at its long mean.
pub fn objective_mean_path(theta: &ThetaSpec, panel: &InfectionPanel, zipf: &ZipfSpec, cfg: &ObjectiveConfig) -> Result<f64> {
    let fit = Fit::new(theta, panel, zipf, cfg)?;
    fit.error(&fit.env.mean_paths(&fit.grid))
}

struct Fit {
    h: f64,
    observed: Vec<Vec<f64>>,
    initial: SirState,
    grid: TimeGrid,
    env: EnvironmentSpec,
    h_ref: f64,
    substeps: usize,
}

impl Fit {
    fn new(theta: &ThetaSpec, panel: &InfectionPanel, zipf: &ZipfSpec, cfg: &ObjectiveConfig) -> Result<Self> {
        theta.validate()?;
        if !(cfg.h_ref > 0.0) {
            return Err(Error::invalid("h_ref", "must be > 0"));
        }
        let k_max = panel.max_size();
        Error::check_len("size-law support", k_max, zipf.max_size)?;
        let populations: Vec<f64> = if cfg.smooth_populations {
            population_weights(theta.h_star, zipf, cfg.allocation)?
        } else {
            allocate_populations_with(theta.h_star, zipf, cfg.allocation)?
                .into_iter()
                .map(|h| h as f64)
                .collect()
        };
        let observed = observed_current(panel, theta.gamma1_0, cfg.semantics);
        Ok(Self {
            h: populations.iter().sum(),
            initial: initial_state(&populations, &observed[0])?,
            observed,
            grid: TimeGrid::daily(panel.days() - 1)?,
            env: theta.environment(k_max)?,
            h_ref: cfg.h_ref,
            substeps: cfg.substeps,
        })
    }

    fn error(&self, paths: &ParameterPaths) -> Result<f64> {
        let traj = simulate_sir_substeps(&self.initial, &paths.sir_params(), &self.grid, self.substeps)?;
        Ok(traj
            .states
            .iter()
            .zip(&self.observed)
            .map(|(state, obs)| {
                state
                    .i
                    .iter()
                    .zip(obs)
                    .map(|(i, o)| ((o - self.h * i) / self.h_ref).powi(2))
                    .sum::<f64>()
            })
            .sum())
    }
}

fn observed_current(panel: &InfectionPanel, gamma1: f64, semantics: PanelSemantics) -> Vec<Vec<f64>> {
    let counts = panel.counts();
    match semantics {
        PanelSemantics::CurrentlyInfected => counts.to_vec(),
        PanelSemantics::NewInfections => {
            let k_max = panel.max_size();
            let duration: Vec<f64> = (1..=k_max).map(|k| harmonic(k) / gamma1).collect();
            (0..counts.len())
                .map(|u| {
                    (0..k_max)
                        .map(|k| (0..=u).filter(|v| ((u - v) as f64) < duration[k]).map(|v| counts[v][k]).sum())
                        .collect()
                })
                .collect()
        }
    }
}
