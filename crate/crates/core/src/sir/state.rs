use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fractions of susceptible, infected and removed firms per size `k = 1..=K`
/// (index `k - 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirState {
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
}

impl SirState {
    pub fn new(s: Vec<f64>, i: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Empty("SIR state"));
        }
        Error::check_len("infected compartment", s.len(), i.len())?;
        Error::check_len("removed compartment", s.len(), r.len())?;
        if s.iter().chain(&i).chain(&r).any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::invalid("state", "compartments must be finite and >= 0"));
        }
        Ok(Self { s, i, r })
    }

    /// All-susceptible state with the given fractions.
    pub fn susceptible(s: Vec<f64>) -> Result<Self> {
        let k = s.len();
        Self::new(s, vec![0.0; k], vec![0.0; k])
    }

    pub fn max_size(&self) -> usize {
        self.s.len()
    }

    /// `N = Σ k (S_k + I_k + R_k)`, the average number of subunits per firm.
    pub fn total_size(&self) -> f64 {
        weighted(&self.s) + weighted(&self.i) + weighted(&self.r)
    }

    /// `Σ k I_k`.
    pub fn infected_subunits(&self) -> f64 {
        weighted(&self.i)
    }

    pub fn removed_subunits(&self) -> f64 {
        weighted(&self.r)
    }
}

fn weighted(x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(k, v)| (k + 1) as f64 * v).sum()
}

/// Coefficients of the SIR system at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirParamsAt {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// In-firm attack probability.
    pub a: f64,
}

impl SirParamsAt {
    pub fn new(beta: Vec<f64>, gamma: Vec<f64>, a: f64) -> Result<Self> {
        Error::check_len("gamma", beta.len(), gamma.len())?;
        if beta.iter().chain(&gamma).any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::invalid("rates", "beta and gamma must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::invalid("a", format!("must lie in [0, 1], got {a}")));
        }
        Ok(Self { beta, gamma, a })
    }

    /// Size-scaled rates from the size-1 values.
    pub fn harmonic(beta1: f64, gamma1: f64, a: f64, max_size: usize) -> Result<Self> {
        let (gamma, beta) = scale_rates(gamma1, beta1, max_size);
        Self::new(beta, gamma, a)
    }

    pub fn max_size(&self) -> usize {
        self.beta.len()
    }
}

/// `H_k = Σ_{j<=k} 1/j`.
pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|j| 1.0 / j as f64).sum()
}

/// `(γ_k, β_k) = (γ_1, β_1) / H_k` for `k = 1..=max_size`.
pub fn scale_rates(gamma1: f64, beta1: f64, max_size: usize) -> (Vec<f64>, Vec<f64>) {
    let mut h = 0.0;
    let mut gamma = Vec::with_capacity(max_size);
    let mut beta = Vec::with_capacity(max_size);
    for k in 1..=max_size {
        h += 1.0 / k as f64;
        gamma.push(gamma1 / h);
        beta.push(beta1 / h);
    }
    (gamma, beta)
}
