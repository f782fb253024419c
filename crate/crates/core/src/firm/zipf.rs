use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discrete power law for firm sizes: frequencies `q · k^-(1+a)` on `1..=K`.
///
/// `scale` is the coefficient of the fitted frequency curve; sampling uses the
/// normalised pmf `k^-(1+a) / Σ_j j^-(1+a)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipfSpec {
    pub exponent: f64,
    pub scale: f64,
    pub max_size: usize,
}

impl ZipfSpec {
    pub fn new(exponent: f64, scale: f64, max_size: usize) -> Result<Self> {
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(Error::invalid("exponent", format!("must be > 0, got {exponent}")));
        }
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::invalid("scale", format!("must lie in (0, 1], got {scale}")));
        }
        if max_size == 0 {
            return Err(Error::invalid("max_size", "must be >= 1"));
        }
        Ok(Self {
            exponent,
            scale,
            max_size,
        })
    }

    /// Fitted relative frequency of size `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        self.scale * (k as f64).powf(-(1.0 + self.exponent))
    }

    pub fn pmf(&self) -> Vec<f64> {
        let w: Vec<f64> = (1..=self.max_size).map(|k| (k as f64).powf(-(1.0 + self.exponent))).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }
}

/// IID sizes from the normalised pmf by inverse-CDF lookup.
pub fn sample_firm_sizes<R: Rng + ?Sized>(spec: &ZipfSpec, count: usize, rng: &mut R) -> Vec<usize> {
    let mut cdf = spec.pmf();
    for k in 1..cdf.len() {
        cdf[k] += cdf[k - 1];
    }
    (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            (cdf.partition_point(|&c| c <= u) + 1).min(spec.max_size)
        })
        .collect()
}
