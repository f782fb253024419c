use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distribution::LossDistribution;
use super::scenario::{approx_episode_loss, EpisodeModel};
use crate::error::{Error, Result};
use crate::firm::Firm;
use crate::stochproc::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AepConfig {
    /// Mean number of episodes per horizon.
    pub upsilon: f64,
    /// Outer replications `M_P`.
    pub n_outer: usize,
    pub thresholds: Vec<f64>,
    /// Replace the Poisson count by a fixed number of episodes.
    #[serde(default)]
    pub forced_count: Option<u32>,
}

impl AepConfig {
    pub fn new(upsilon: f64, n_outer: usize, thresholds: Vec<f64>) -> Result<Self> {
        let cfg = Self {
            upsilon,
            n_outer,
            thresholds,
            forced_count: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.upsilon.is_finite() && self.upsilon >= 0.0) {
            return Err(Error::invalid("upsilon", format!("must be >= 0, got {}", self.upsilon)));
        }
        if self.n_outer == 0 {
            return Err(Error::invalid("n_outer", "must be >= 1"));
        }
        Ok(())
    }

    fn counts(&self, master: RngStream) -> Vec<u32> {
        if let Some(n) = self.forced_count {
            return vec![n; self.n_outer];
        }
        if self.upsilon == 0.0 {
            return vec![0; self.n_outer];
        }
        let pois = Poisson::new(self.upsilon).expect("validated rate");
        let mut rng = master.child(0).rng();
        (0..self.n_outer).map(|_| pois.sample(&mut rng) as u32).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AepResult {
    pub thresholds: Vec<f64>,
    /// `AEP(x) = P(Σ_{l<=P} 𝔠^l > x)` at each threshold.
    pub exceedance: Vec<f64>,
    /// Episode count of each outer replication.
    pub counts: Vec<u32>,
    /// Compound losses of the outer replications.
    pub compound: LossDistribution,
    /// Largest single-episode loss drawn.
    pub max_single: f64,
}

impl AepResult {
    pub fn at(&self, x: f64) -> f64 {
        self.compound.exceedance(x)
    }
}

/// Stream of episode `l` inside outer replication `m`.
pub fn episode_stream(master: RngStream, m: usize, l: usize) -> RngStream {
    master.child(1).child(m as u64).stream(l as u64)
}

/// Outer compound-Poisson loop with every episode resimulated by `sampler`.
pub fn aep_exact<F>(cfg: &AepConfig, master: RngStream, sampler: F) -> Result<AepResult>
where
    F: Fn(RngStream) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let counts = cfg.counts(master);
    let per_outer: Vec<(f64, f64)> = counts
        .par_iter()
        .enumerate()
        .map(|(m, &p)| {
            let mut sum = 0.0;
            let mut max: f64 = 0.0;
            for l in 0..p as usize {
                let loss = sampler(episode_stream(master, m, l))?;
                sum += loss;
                max = max.max(loss);
            }
            Ok((sum, max))
        })
        .collect::<Result<_>>()?;
    finish(cfg, counts, per_outer)
}

/// Same outer loop drawing episode losses uniformly from a fixed pool.
pub fn aep_bootstrap(pool: &LossDistribution, cfg: &AepConfig, master: RngStream) -> Result<AepResult> {
    if pool.is_empty() {
        return Err(Error::Empty("episode loss pool"));
    }
    let xs = pool.samples();
    aep_exact(cfg, master, |stream| Ok(xs[stream.rng().random_range(0..xs.len())]))
}

/// `AEP★`: the outer loop with each episode's loss replaced by its expectation given the
/// contagion path.
pub fn aep_approx(model: &EpisodeModel, firms: &[Firm], cfg: &AepConfig, master: RngStream) -> Result<AepResult> {
    aep_exact(cfg, master, |stream| approx_episode_loss(model, firms, stream))
}

fn finish(cfg: &AepConfig, counts: Vec<u32>, per_outer: Vec<(f64, f64)>) -> Result<AepResult> {
    let max_single = per_outer.iter().map(|p| p.1).fold(0.0, f64::max);
    let compound = LossDistribution::new(per_outer.into_iter().map(|p| p.0).collect())?;
    let exceedance = cfg.thresholds.iter().map(|&x| compound.exceedance(x)).collect();
    Ok(AepResult {
        thresholds: cfg.thresholds.clone(),
        exceedance,
        counts,
        compound,
        max_single,
    })
}

/// Empirical frequencies of `P = 0, 1, ..., max_count` among outer replications.
pub fn poisson_frequencies(counts: &[u32], max_count: usize) -> Vec<f64> {
    let mut freq = vec![0.0; max_count + 1];
    for &c in counts {
        if (c as usize) <= max_count {
            freq[c as usize] += 1.0;
        }
    }
    let n = counts.len().max(1) as f64;
    freq.iter_mut().for_each(|f| *f /= n);
    freq
}
