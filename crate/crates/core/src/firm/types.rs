use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochproc::{correlated_shocks, gbm_path, TimeGrid};

/// Revenue coefficients of one subunit: daily revenue `z0`, daily drift and daily
/// volatility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Subunit {
    pub z0: f64,
    pub drift: f64,
    pub vol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Firm {
    pub id: String,
    pub sector: String,
    subunits: Vec<Subunit>,
    rho: f64,
}

impl Firm {
    pub fn new(id: impl Into<String>, sector: impl Into<String>, subunits: Vec<Subunit>, rho: f64) -> Result<Self> {
        if subunits.is_empty() {
            return Err(Error::Empty("firm subunits"));
        }
        for s in &subunits {
            if !(s.z0.is_finite() && s.z0 > 0.0) {
                return Err(Error::invalid("z0", format!("must be > 0, got {}", s.z0)));
            }
            if !(s.vol.is_finite() && s.vol > 0.0) {
                return Err(Error::invalid("vol", format!("must be > 0, got {}", s.vol)));
            }
            if !s.drift.is_finite() {
                return Err(Error::invalid("drift", "must be finite"));
            }
        }
        let k = subunits.len();
        if k > 1 {
            let lower = -1.0 / (k as f64 - 1.0);
            if !(rho > lower && rho <= 1.0) {
                return Err(Error::invalid("rho", format!("must lie in ({lower}, 1], got {rho}")));
            }
        }
        Ok(Self {
            id: id.into(),
            sector: sector.into(),
            subunits,
            rho,
        })
    }

    pub fn size(&self) -> usize {
        self.subunits.len()
    }

    pub fn subunits(&self) -> &[Subunit] {
        &self.subunits
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `Σ_j z_ij,0 e^{μ_ij t}`, the expected undisturbed revenue rate at `t`.
    pub fn expected_revenue(&self, t: f64) -> f64 {
        self.subunits.iter().map(|s| s.z0 * (s.drift * t).exp()).sum()
    }

    /// Undisturbed revenue paths, one per subunit, sampled exactly on the grid.
    pub fn no_attack_paths<R: Rng + ?Sized>(&self, grid: &TimeGrid, rng: &mut R) -> Vec<Vec<f64>> {
        let shocks = correlated_shocks(self.size(), self.rho, grid.cells(), rng).expect("rho validated");
        self.subunits
            .iter()
            .zip(&shocks)
            .map(|(s, e)| gbm_path(s.z0, s.drift, s.vol, grid, e).expect("subunit validated"))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfectionSource {
    /// External attack (first jump of the subunit's own Cox process).
    Primary,
    /// Internal spread at the firm's first external hit.
    Secondary,
    None,
}

/// Infection outcome of one firm in one episode, one entry per subunit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfectionRecord {
    /// Infection time; the grid sentinel `T + 1` means never.
    pub tau: Vec<f64>,
    /// Days until revenue reverts; zero when never infected.
    pub delta: Vec<f64>,
    pub severity: Vec<f64>,
    pub source: Vec<InfectionSource>,
}

impl InfectionRecord {
    pub fn size(&self) -> usize {
        self.tau.len()
    }

    pub fn is_infected(&self, j: usize) -> bool {
        self.source[j] != InfectionSource::None
    }

    /// `τ_i`, the first infection time in the firm (sentinel if none).
    pub fn first_infection(&self) -> f64 {
        self.tau.iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[inline]
    pub fn is_active(&self, j: usize, t: f64) -> bool {
        self.is_infected(j) && self.tau[j] <= t && t < self.tau[j] + self.delta[j]
    }
}
