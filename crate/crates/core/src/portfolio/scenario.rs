use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::firm::quadrature::gauss_legendre_nodes;
use crate::firm::{Firm, InfectionRecord, MarginalTau};
use crate::sir::{simulate_sir_substeps, EnvironmentSpec, ParameterPaths, SirState, SirTrajectory};
use crate::stochproc::{BetaSeverity, CumulativeHazard, RngStream, TimeGrid};

/// Everything needed to replay one cyber-episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeModel {
    pub env: EnvironmentSpec,
    pub initial: SirState,
    /// Firm counts `h_k` the SIR fractions refer to.
    pub populations: Vec<f64>,
    pub grid: TimeGrid,
    pub substeps: usize,
    pub severity: BetaSeverity,
    /// Also simulate undisturbed revenue for firms that are never hit, so the realised
    /// total revenue can be reported.
    pub track_revenue: bool,
}

impl EpisodeModel {
    pub fn new(
        env: EnvironmentSpec,
        initial: SirState,
        populations: Vec<f64>,
        grid: TimeGrid,
        severity: BetaSeverity,
    ) -> Result<Self> {
        Error::check_len("populations", env.max_size, populations.len())?;
        Error::check_len("initial state", env.max_size, initial.max_size())?;
        Ok(Self {
            env,
            initial,
            populations,
            grid,
            substeps: 1,
            severity,
            track_revenue: false,
        })
    }

    /// CIR paths and the SIR trajectory they drive.
    pub fn simulate_contagion(&self, stream: RngStream) -> Result<(ParameterPaths, SirTrajectory)> {
        let params = self.env.simulate(&self.grid, stream.child(0));
        let traj = simulate_sir_substeps(&self.initial, &params.sir_params(), &self.grid, self.substeps)?;
        Ok((params, traj))
    }
}

/// One Monte Carlo path of an episode over the portfolio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub params: ParameterPaths,
    pub trajectory: SirTrajectory,
    pub records: Vec<InfectionRecord>,
    /// Per-firm claim over the whole horizon.
    pub firm_losses: Vec<f64>,
    /// Portfolio claim per cell `[t_u, t_{u+1}]`.
    pub daily_losses: Vec<f64>,
    /// `Σ_i Σ_j z_ij,0 e^{μ_ij t} π_ij 1{active}` per grid point.
    pub shortfall: Vec<f64>,
    /// Realised disturbed revenue `Σ_i Z_i,t` per grid point, when tracked.
    pub revenue: Option<Vec<f64>>,
    /// Revenue of the same paths without the episode, when tracked.
    pub undisturbed: Option<Vec<f64>>,
}

pub fn simulate_scenario(model: &EpisodeModel, firms: &[Firm], stream: RngStream) -> Result<ScenarioOutcome> {
    let grid = model.grid;
    let (params, trajectory) = model.simulate_contagion(stream)?;
    let hazard = CumulativeHazard::new(&trajectory.force, &grid)?;
    let a_path = params.a_path();
    let mut gamma_by_size: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let firm_root = stream.child(1);

    let mut records = Vec::with_capacity(firms.len());
    let mut firm_losses = Vec::with_capacity(firms.len());
    let mut daily_losses = vec![0.0; grid.cells()];
    let mut shortfall = vec![0.0; grid.len()];
    let mut revenue = model.track_revenue.then(|| vec![0.0; grid.len()]);
    let mut undisturbed = model.track_revenue.then(|| vec![0.0; grid.len()]);
    let mut firm_daily = vec![0.0; grid.cells()];

    for (i, firm) in firms.iter().enumerate() {
        let gamma = gamma_by_size.entry(firm.size()).or_insert_with(|| params.gamma_path(firm.size()));
        let mut rng = firm_root.child(i as u64).rng();
        let record = crate::firm::infection::draw_record(firm.size(), &hazard, &a_path, gamma, &model.severity, &mut rng);
        let hit = (0..firm.size()).any(|j| record.is_infected(j));
        if hit || model.track_revenue {
            let paths = firm.no_attack_paths(&grid, &mut rng);
            if hit {
                firm_daily.iter_mut().for_each(|x| *x = 0.0);
                crate::firm::claims::daily_claims_into(&paths, &record, &grid, &mut firm_daily);
                firm_losses.push(firm_daily.iter().sum());
                daily_losses.iter_mut().zip(&firm_daily).for_each(|(a, b)| *a += b);
            } else {
                firm_losses.push(0.0);
            }
            if let (Some(rev), Some(base)) = (revenue.as_mut(), undisturbed.as_mut()) {
                for (j, p) in paths.iter().enumerate() {
                    for (u, z) in p.iter().enumerate() {
                        let active = record.is_active(j, grid.point(u));
                        rev[u] += if active { (1.0 - record.severity[j]) * z } else { *z };
                        base[u] += z;
                    }
                }
            }
        } else {
            firm_losses.push(0.0);
        }
        if hit {
            for (j, s) in firm.subunits().iter().enumerate() {
                if !record.is_infected(j) {
                    continue;
                }
                for (u, slot) in shortfall.iter_mut().enumerate() {
                    let t = grid.point(u);
                    if record.is_active(j, t) {
                        *slot += s.z0 * (s.drift * t).exp() * record.severity[j];
                    }
                }
            }
        }
        records.push(record);
    }
    Ok(ScenarioOutcome {
        params,
        trajectory,
        records,
        firm_losses,
        daily_losses,
        shortfall,
        revenue,
        undisturbed,
    })
}

/// `𝔠_T = Σ_i C_{i,[0,T]}`.
pub fn episode_loss(outcome: &ScenarioOutcome) -> f64 {
    outcome.firm_losses.iter().sum()
}

/// Scenario `m` runs on `master.stream(m)`; results come back in scenario order
/// whatever the thread count.
pub fn run_scenarios<T, F>(model: &EpisodeModel, firms: &[Firm], master: RngStream, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, ScenarioOutcome) -> T + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|m| simulate_scenario(model, firms, master.stream(m as u64)).map(|o| f(m, o)))
        .collect()
}

/// `E[O_t] = Σ_i Σ_j z_ij,0 e^{μ_ij t} - mean shortfall`, per grid point.
pub fn expected_output(firms: &[Firm], mean_shortfall: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    Error::check_len("shortfall", grid.len(), mean_shortfall.len())?;
    Ok(grid
        .points()
        .zip(mean_shortfall)
        .map(|(t, s)| firms.iter().map(|f| f.expected_revenue(t)).sum::<f64>() - s)
        .collect())
}

/// `𝔠★_T`: the portfolio's expected claim given only the contagion path of the
/// episode on `stream` (same contagion as [`simulate_scenario`] on that stream).
pub fn approx_episode_loss(model: &EpisodeModel, firms: &[Firm], stream: RngStream) -> Result<f64> {
    let (params, traj) = model.simulate_contagion(stream)?;
    approx_loss_given(model, firms, &params, &traj)
}

pub(crate) fn approx_loss_given(
    model: &EpisodeModel,
    firms: &[Firm],
    params: &ParameterPaths,
    traj: &SirTrajectory,
) -> Result<f64> {
    let grid = model.grid;
    let hazard = CumulativeHazard::new(&traj.force, &grid)?;
    let a_path = params.a_path();
    let pi_star = model.severity.mean();
    let mut kernels: BTreeMap<usize, Vec<(f64, f64, f64)>> = BTreeMap::new();
    let mut total = 0.0;
    for firm in firms {
        let k = firm.size();
        let kernel = match kernels.entry(k) {
            std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::btree_map::Entry::Vacant(e) => {
                let marginal = MarginalTau::new(k, &hazard, &a_path)?;
                e.insert(claim_kernel(&marginal, &params.gamma_path(k)))
            }
        };
        let horizon = grid.end();
        for s in firm.subunits() {
            let mu = s.drift;
            let mut acc = 0.0;
            for &(u, wf, delta) in kernel.iter() {
                let end = horizon.min(u + delta);
                acc += wf
                    * if mu.abs() < 1e-10 {
                        end - u
                    } else {
                        ((mu * end).exp() - (mu * u).exp()) / mu
                    };
            }
            total += pi_star * s.z0 * acc;
        }
    }
    Ok(total)
}

// quadrature nodes (u, weight * density, recovery duration) split at the horizon kink
fn claim_kernel(marginal: &MarginalTau, gamma: &[f64]) -> Vec<(f64, f64, f64)> {
    let grid = marginal.grid();
    let mut out = Vec::with_capacity(grid.cells() * 16);
    for c in 0..grid.cells() {
        let (c0, c1) = (grid.point(c), grid.point(c + 1));
        let delta = 1.0 / gamma[c];
        let kink = (grid.end() - delta).clamp(c0, c1);
        for (a, b) in [(c0, kink), (kink, c1)] {
            if b <= a {
                continue;
            }
            for (u, w) in gauss_legendre_nodes(a, b) {
                out.push((u, w * marginal.density(u), delta));
            }
        }
    }
    out
}
