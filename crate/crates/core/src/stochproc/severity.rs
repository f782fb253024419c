use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Beta law of the fraction of revenue lost while a subunit is infected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBeta", into = "RawBeta")]
pub struct BetaSeverity {
    alpha: f64,
    beta: f64,
    dist: Beta<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawBeta {
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawBeta> for BetaSeverity {
    type Error = Error;
    fn try_from(raw: RawBeta) -> Result<Self> {
        Self::new(raw.alpha, raw.beta)
    }
}

impl From<BetaSeverity> for RawBeta {
    fn from(s: BetaSeverity) -> Self {
        RawBeta {
            alpha: s.alpha,
            beta: s.beta,
        }
    }
}

impl BetaSeverity {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid("alpha", format!("must be > 0, got {alpha}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid("beta", format!("must be > 0, got {beta}")));
        }
        let dist = Beta::new(alpha, beta).map_err(|e| Error::invalid("alpha", e.to_string()))?;
        Ok(Self { alpha, beta, dist })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn std_dev(&self) -> f64 {
        let s = self.alpha + self.beta;
        (self.alpha * self.beta / (s * s * (s + 1.0))).sqrt()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.dist.sample(rng)
    }
}

pub fn sample_severity<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> Result<f64> {
    Ok(BetaSeverity::new(alpha, beta)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochproc::RngStream;

    #[test]
    fn rejects_nonpositive_shapes() {
        assert!(BetaSeverity::new(0.0, 1.0).is_err());
        assert!(BetaSeverity::new(1.0, -2.0).is_err());
    }

    #[test]
    fn beta_50_10_moments() {
        let s = BetaSeverity::new(50.0, 10.0).unwrap();
        assert!((s.mean() - 0.8333).abs() < 1e-4);
        assert!((s.std_dev() - 0.048).abs() < 5e-4);
        let mut rng = RngStream::new(4, 0).rng();
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((m - 0.833).abs() < 0.005);
        assert!((sd - 0.048).abs() < 0.005);
    }

    #[test]
    fn beta_1_1_is_uniform() {
        let mut rng = RngStream::new(6, 0).rng();
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sample_severity(1.0, 1.0, &mut rng).unwrap()).collect();
        xs.sort_by(f64::total_cmp);
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - x).abs()))
            .fold(0.0, f64::max);
        assert!(ks < 0.01);
    }

    #[test]
    fn serde_roundtrip_validates() {
        let s: BetaSeverity = serde_json::from_str(r#"{"alpha":50.0,"beta":10.0}"#).unwrap();
        assert_eq!(s.alpha(), 50.0);
        assert!(serde_json::from_str::<BetaSeverity>(r#"{"alpha":-1.0,"beta":10.0}"#).is_err());
    }
}
