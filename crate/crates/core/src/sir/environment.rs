use serde::{Deserialize, Serialize};

use super::state::{SirParamsAt, SirState};
use crate::error::{Error, Result};
use crate::stochproc::{logistic, simulate_cir, CirSpec, RngStream, TimeGrid};

/// The three CIR factors driving the contagion: size-1 out-firm rate, size-1
/// recovery rate and the in-firm rate in logit space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub beta1: CirSpec,
    pub gamma1: CirSpec,
    pub a_tilde: CirSpec,
    pub max_size: usize,
}

impl EnvironmentSpec {
    pub fn simulate(&self, grid: &TimeGrid, stream: RngStream) -> ParameterPaths {
        ParameterPaths {
            beta1: simulate_cir(&self.beta1, grid, &mut stream.child(0).rng()),
            gamma1: simulate_cir(&self.gamma1, grid, &mut stream.child(1).rng()),
            a_tilde: simulate_cir(&self.a_tilde, grid, &mut stream.child(2).rng()),
            max_size: self.max_size,
        }
    }

    /// Paths frozen at the long-run means (which equal the initial values here).
    pub fn mean_paths(&self, grid: &TimeGrid) -> ParameterPaths {
        let path = |c: &CirSpec| grid.points().map(|t| c.mean(t - grid.t0())).collect();
        ParameterPaths {
            beta1: path(&self.beta1),
            gamma1: path(&self.gamma1),
            a_tilde: path(&self.a_tilde),
            max_size: self.max_size,
        }
    }
}

/// Realised coefficient paths for one scenario, one value per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPaths {
    pub beta1: Vec<f64>,
    pub gamma1: Vec<f64>,
    pub a_tilde: Vec<f64>,
    pub max_size: usize,
}

impl ParameterPaths {
    pub fn len(&self) -> usize {
        self.beta1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta1.is_empty()
    }

    /// In-firm attack probability at grid point `u`.
    pub fn a(&self, u: usize) -> f64 {
        logistic(self.a_tilde[u])
    }

    pub fn a_path(&self) -> Vec<f64> {
        self.a_tilde.iter().map(|&x| logistic(x)).collect()
    }

    /// `γ_k` per grid point.
    pub fn gamma_path(&self, k: usize) -> Vec<f64> {
        let h = super::state::harmonic(k);
        self.gamma1.iter().map(|g| g / h).collect()
    }

    pub fn params_at(&self, u: usize) -> SirParamsAt {
        SirParamsAt::harmonic(self.beta1[u], self.gamma1[u], self.a(u), self.max_size)
            .expect("CIR paths are nonnegative")
    }

    pub fn sir_params(&self) -> Vec<SirParamsAt> {
        (0..self.len()).map(|u| self.params_at(u)).collect()
    }
}

/// Initial infected firm counts per size carrying `subunits` infected subunits in total,
/// spread proportionally to `k · h_k`.
pub fn allocate_initial_infected(populations: &[f64], subunits: f64) -> Result<Vec<f64>> {
    let weight: f64 = populations.iter().enumerate().map(|(k, h)| (k + 1) as f64 * h).sum();
    if !(weight > 0.0) {
        return Err(Error::invalid("populations", "need a positive population"));
    }
    Ok(populations.iter().map(|h| subunits * h / weight).collect())
}

/// State with `S_k = (h_k - i_k)/h`, `I_k = i_k/h`, `R_k = 0`, where `h = Σ h_k`.
pub fn initial_state(populations: &[f64], infected: &[f64]) -> Result<SirState> {
    Error::check_len("infected counts", populations.len(), infected.len())?;
    let h: f64 = populations.iter().sum();
    if !(h > 0.0) {
        return Err(Error::invalid("populations", "need a positive population"));
    }
    if let Some(k) = populations.iter().zip(infected).position(|(p, i)| i > p || *i < 0.0) {
        return Err(Error::invalid(
            "infected counts",
            format!("size {} has {} infected out of {}", k + 1, infected[k], populations[k]),
        ));
    }
    let s = populations.iter().zip(infected).map(|(p, i)| (p - i) / h).collect();
    let i = infected.iter().map(|i| i / h).collect();
    SirState::new(s, i, vec![0.0; populations.len()])
}
