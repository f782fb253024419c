use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Empirical sample of aggregate losses, kept sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossDistribution {
    samples: Vec<f64>,
}

impl LossDistribution {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::invalid("samples", "losses must be finite and >= 0"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(1/M) #{loss <= x}`.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.partition_point(|&s| s <= x) as f64 / self.samples.len() as f64
    }

    /// `(1/M) #{loss > x}`.
    pub fn exceedance(&self, x: f64) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let n = self.samples.len();
        (n - self.samples.partition_point(|&s| s <= x)) as f64 / n as f64
    }

    /// Linear-interpolation quantile, `p` in `[0, 1]`.
    pub fn quantile(&self, p: f64) -> Option<f64> {
        let n = self.samples.len();
        if n == 0 {
            return None;
        }
        let pos = p.clamp(0.0, 1.0) * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        Some(self.samples[lo] + (pos - lo as f64) * (self.samples[hi] - self.samples[lo]))
    }

    pub fn mean(&self) -> Option<f64> {
        if self.samples.is_empty() {
            None
        } else {
            Some(self.samples.iter().sum::<f64>() / self.samples.len() as f64)
        }
    }

    pub fn min(&self) -> Option<f64> {
        self.samples.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.samples.last().copied()
    }
}

pub fn empirical_cdf(dist: &LossDistribution, x: f64) -> f64 {
    dist.cdf(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub mean: f64,
    pub mode: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Mean, histogram mode (Freedman-Diaconis bins; the mode is the median of the samples
/// in the fullest bin) and support bounds.
pub fn distribution_summary(dist: &LossDistribution) -> Result<DistributionSummary> {
    let (lower, upper) = match (dist.min(), dist.max()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Empty("loss distribution")),
    };
    let mean = dist.mean().unwrap_or(0.0);
    let xs = dist.samples();
    let n = xs.len();
    let range = upper - lower;
    if range == 0.0 {
        return Ok(DistributionSummary {
            mean,
            mode: lower,
            lower,
            upper,
        });
    }
    let iqr = dist.quantile(0.75).unwrap_or(0.0) - dist.quantile(0.25).unwrap_or(0.0);
    let mut width = 2.0 * iqr / (n as f64).cbrt();
    if !(width > 0.0) {
        // degenerate spread: Sturges
        width = range / ((n as f64).log2().ceil() + 1.0);
    }
    let bins = ((range / width).ceil() as usize).clamp(1, 100_000);
    let width = range / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in xs {
        counts[(((x - lower) / width) as usize).min(bins - 1)] += 1;
    }
    let best = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let start: usize = counts[..best].iter().sum();
    let members = &xs[start..start + counts[best]];
    let mode = members[members.len() / 2];
    Ok(DistributionSummary {
        mean,
        mode,
        lower,
        upper,
    })
}
