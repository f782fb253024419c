use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::firm::ZipfSpec;
use crate::sir::EnvironmentSpec;
use crate::stochproc::CirSpec;

/// The six contagion coefficients: shared CIR speed and volatility, initial in-firm
/// rate (logit space), initial size-1 recovery and out-firm rates, total firm count.
/// Every CIR factor reverts to its own initial value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaSpec {
    pub kappa_a: f64,
    pub sigma_a: f64,
    pub a0: f64,
    pub gamma1_0: f64,
    pub beta1_0: f64,
    pub h_star: f64,
}

impl ThetaSpec {
    pub fn new(kappa_a: f64, sigma_a: f64, a0: f64, gamma1_0: f64, beta1_0: f64, h_star: f64) -> Result<Self> {
        let t = Self {
            kappa_a,
            sigma_a,
            a0,
            gamma1_0,
            beta1_0,
            h_star,
        };
        t.validate()?;
        Ok(t)
    }

    /// Reference coefficients fitted to a historical ransomware episode.
    pub fn reference() -> Self {
        Self {
            kappa_a: 0.4474,
            sigma_a: 0.0151,
            a0: 0.3466,
            gamma1_0: 0.6782,
            beta1_0: 0.5471,
            h_star: 14_210.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("kappa_a", self.kappa_a),
            ("sigma_a", self.sigma_a),
            ("a0", self.a0),
            ("gamma1_0", self.gamma1_0),
            ("beta1_0", self.beta1_0),
            ("h_star", self.h_star),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be > 0, got {v}")));
            }
        }
        self.environment(1).map(|_| ())
    }

    pub fn environment(&self, max_size: usize) -> Result<EnvironmentSpec> {
        let cir = |x0| CirSpec::new(self.kappa_a, x0, self.sigma_a, x0);
        Ok(EnvironmentSpec {
            beta1: cir(self.beta1_0)?,
            gamma1: cir(self.gamma1_0)?,
            a_tilde: cir(self.a0)?,
            max_size,
        })
    }

    pub fn to_vec(&self) -> [f64; 6] {
        [self.kappa_a, self.sigma_a, self.a0, self.gamma1_0, self.beta1_0, self.h_star]
    }
}

/// How firm counts per size are derived from the total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationRule {
    /// `⌈h⋆ q k^-(1+a)⌉`, the fitted frequency curve scaled to `h⋆`.
    #[default]
    FittedCeil,
    /// `⌊h⋆ k^-a / Σ_j j^-a⌋`.
    NormalizedFloor,
}

pub fn allocate_populations(h_star: f64, zipf: &ZipfSpec) -> Result<Vec<u64>> {
    allocate_populations_with(h_star, zipf, AllocationRule::default())
}

pub fn allocate_populations_with(h_star: f64, zipf: &ZipfSpec, rule: AllocationRule) -> Result<Vec<u64>> {
    let raw = population_weights(h_star, zipf, rule)?;
    Ok(match rule {
        AllocationRule::FittedCeil => raw.iter().map(|x| x.ceil() as u64).collect(),
        AllocationRule::NormalizedFloor => raw.iter().map(|x| x.floor() as u64).collect(),
    })
}

/// Unrounded firm counts per size under `rule`.
pub fn population_weights(h_star: f64, zipf: &ZipfSpec, rule: AllocationRule) -> Result<Vec<f64>> {
    if !(h_star.is_finite() && h_star >= 1.0) {
        return Err(Error::invalid("h_star", format!("must be >= 1, got {h_star}")));
    }
    let k_max = zipf.max_size;
    Ok(match rule {
        AllocationRule::FittedCeil => (1..=k_max).map(|k| h_star * zipf.frequency(k)).collect(),
        AllocationRule::NormalizedFloor => {
            let w: Vec<f64> = (1..=k_max).map(|k| (k as f64).powf(-zipf.exponent)).collect();
            let total: f64 = w.iter().sum();
            w.iter().map(|x| h_star * x / total).collect()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_theta_is_valid() {
        let t = ThetaSpec::reference();
        t.validate().unwrap();
        let env = t.environment(12).unwrap();
        assert_eq!(env.a_tilde.long_mean(), 0.3466);
        assert!(ThetaSpec::new(0.1, 1.0, 0.3, 0.6, 0.5, 100.0).is_err());
        assert!(ThetaSpec::new(0.1, 0.01, 0.3, 0.6, 0.5, 0.0).is_err());
    }

    #[test]
    fn fitted_allocation_reproduces_reference_table() {
        let zipf = ZipfSpec::new(1.759_21, 0.784_19, 12).unwrap();
        let h = allocate_populations(14_210.0, &zipf).unwrap();
        assert_eq!(h, [11144, 1646, 538, 244, 132, 80, 52, 36, 26, 20, 15, 12]);
    }

    #[test]
    fn allocation_basics() {
        let one = ZipfSpec::new(1.2, 1.0, 1).unwrap();
        assert_eq!(allocate_populations(500.0, &one).unwrap(), [500]);
        let floor = allocate_populations_with(500.0, &ZipfSpec::new(1.5, 0.7, 1).unwrap(), AllocationRule::NormalizedFloor);
        assert_eq!(floor.unwrap(), [500]);
        let z = ZipfSpec::new(1.759, 0.784, 12).unwrap();
        let a = allocate_populations(1_000.0, &z).unwrap();
        let b = allocate_populations(10_000.0, &z).unwrap();
        assert!(a.windows(2).all(|w| w[0] >= w[1]));
        for (x, y) in a.iter().zip(&b) {
            assert!((*y as f64 - 10.0 * *x as f64).abs() <= 10.0);
        }
        assert!(allocate_populations(0.5, &z).is_err());
    }
}
