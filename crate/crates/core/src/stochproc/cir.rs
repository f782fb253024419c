use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::TimeGrid;
use crate::error::{Error, Result};

/// Coefficients of a square-root (CIR) diffusion
/// `dX = speed * (long_mean - X) dt + vol * sqrt(X) dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirSpec {
    speed: f64,
    long_mean: f64,
    vol: f64,
    x0: f64,
}

impl CirSpec {
    pub fn new(speed: f64, long_mean: f64, vol: f64, x0: f64) -> Result<Self> {
        if !(speed.is_finite() && speed > 0.0) {
            return Err(Error::invalid("speed", format!("must be > 0, got {speed}")));
        }
        if !(vol.is_finite() && vol > 0.0) {
            return Err(Error::invalid("vol", format!("must be > 0, got {vol}")));
        }
        if !(x0.is_finite() && x0 >= 0.0) {
            return Err(Error::invalid("x0", format!("must be >= 0, got {x0}")));
        }
        if !long_mean.is_finite() || 2.0 * speed * long_mean < vol * vol {
            return Err(Error::Feller {
                speed,
                long_mean,
                vol,
            });
        }
        Ok(Self {
            speed,
            long_mean,
            vol,
            x0,
        })
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn long_mean(&self) -> f64 {
        self.long_mean
    }

    pub fn vol(&self) -> f64 {
        self.vol
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// Degrees of freedom of the noncentral chi-square transition.
    pub fn degrees_of_freedom(&self) -> f64 {
        4.0 * self.speed * self.long_mean / (self.vol * self.vol)
    }

    /// `E[X_t]` started from `x0`.
    pub fn mean(&self, t: f64) -> f64 {
        let e = (-self.speed * t).exp();
        self.x0 * e + self.long_mean * (1.0 - e)
    }

    /// `Var[X_t]` started from `x0`.
    pub fn variance(&self, t: f64) -> f64 {
        let e = (-self.speed * t).exp();
        let s2 = self.vol * self.vol;
        self.x0 * s2 / self.speed * (e - e * e)
            + self.long_mean * s2 / (2.0 * self.speed) * (1.0 - e) * (1.0 - e)
    }

    /// Exact draw of `X_{t+dt}` given `X_t = x`.
    pub fn transition<R: Rng + ?Sized>(&self, x: f64, dt: f64, rng: &mut R) -> f64 {
        let decay = (-self.speed * dt).exp();
        let s2 = self.vol * self.vol;
        if !(self.degrees_of_freedom() < LARGE_DF) {
            // Gaussian limit of the transition with its exact first two moments.
            let mean = x * decay + self.long_mean * (1.0 - decay);
            let var = x * s2 / self.speed * (decay - decay * decay)
                + self.long_mean * s2 / (2.0 * self.speed) * (1.0 - decay) * (1.0 - decay);
            let z: f64 = StandardNormal.sample(rng);
            return (mean + var.sqrt() * z).max(0.0);
        }
        let scale = s2 * (1.0 - decay) / (4.0 * self.speed);
        let noncentrality = x * decay / scale;
        scale * sample_noncentral_chi2(self.degrees_of_freedom(), noncentrality, rng)
    }
}

/// Degrees of freedom beyond which the transition is drawn from its normal limit.
const LARGE_DF: f64 = 1e12;

/// Noncentral chi-square draw with `df` degrees of freedom.
pub fn sample_noncentral_chi2<R: Rng + ?Sized>(df: f64, noncentrality: f64, rng: &mut R) -> f64 {
    if df > 1.0 {
        let z: f64 = StandardNormal.sample(rng);
        let shifted = z + noncentrality.sqrt();
        let central = ChiSquared::new(df - 1.0)
            .expect("df - 1 > 0")
            .sample(rng);
        shifted * shifted + central
    } else {
        let n = if noncentrality > 0.0 {
            Poisson::new(noncentrality / 2.0)
                .expect("finite positive rate")
                .sample(rng)
        } else {
            0.0
        };
        let k = df + 2.0 * n;
        if k <= 0.0 {
            0.0
        } else {
            ChiSquared::new(k).expect("k > 0").sample(rng)
        }
    }
}

/// Exact CIR path on `grid`; element `u` is the value at `grid.point(u)`.
pub fn simulate_cir<R: Rng + ?Sized>(spec: &CirSpec, grid: &TimeGrid, rng: &mut R) -> Vec<f64> {
    let mut path = Vec::with_capacity(grid.len());
    let mut x = spec.x0;
    path.push(x);
    for _ in 0..grid.cells() {
        x = spec.transition(x, grid.step(), rng);
        path.push(x);
    }
    path
}
