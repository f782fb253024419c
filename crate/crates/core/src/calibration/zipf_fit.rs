use serde::{Deserialize, Serialize};

use super::nelder_mead::golden_section;
use crate::error::{Error, Result};
use crate::firm::ZipfSpec;

const EXPONENT_RANGE: (f64, f64) = (1e-4, 20.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZipfFitMethod {
    /// Least squares on relative frequencies.
    #[default]
    Nls,
    /// Ordinary regression of log-frequency on log-size, empty sizes dropped.
    LogLog,
    /// Maximum likelihood under the truncated law on `1..=K`.
    Mle,
}

/// Relative frequency of each size `1..=max_size`. Sizes outside the range are an error.
pub fn size_frequencies(sizes: &[usize], max_size: usize) -> Result<Vec<f64>> {
    if sizes.is_empty() {
        return Err(Error::Empty("firm sizes"));
    }
    let mut counts = vec![0.0; max_size];
    for &k in sizes {
        if k == 0 || k > max_size {
            return Err(Error::invalid("sizes", format!("size {k} outside 1..={max_size}")));
        }
        counts[k - 1] += 1.0;
    }
    let n = sizes.len() as f64;
    Ok(counts.into_iter().map(|c| c / n).collect())
}

pub fn fit_zipf(sizes: &[usize], max_size: usize) -> Result<ZipfSpec> {
    fit_zipf_with(sizes, max_size, ZipfFitMethod::default())
}

pub fn fit_zipf_with(sizes: &[usize], max_size: usize, method: ZipfFitMethod) -> Result<ZipfSpec> {
    let freq = size_frequencies(sizes, max_size)?;
    fit_frequencies(&freq, method)
}

/// Fit from frequencies (or raw counts; only the shape matters for the exponent,
/// and the scale is normalised to frequencies first).
pub fn fit_zipf_frequencies(freq: &[f64], method: ZipfFitMethod) -> Result<ZipfSpec> {
    if freq.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
        return Err(Error::invalid("frequencies", "must be finite and >= 0"));
    }
    let total: f64 = freq.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Empty("frequencies"));
    }
    let norm: Vec<f64> = freq.iter().map(|f| f / total).collect();
    fit_frequencies(&norm, method)
}

fn fit_frequencies(freq: &[f64], method: ZipfFitMethod) -> Result<ZipfSpec> {
    let k_max = freq.len();
    let occupied = freq.iter().filter(|f| **f > 0.0).count();
    if occupied < 2 {
        return Err(Error::DegenerateFit(
            "size law needs at least two distinct observed sizes".into(),
        ));
    }
    let (exponent, scale) = match method {
        ZipfFitMethod::Nls => {
            let sse = |a: f64| {
                let q = nls_scale(freq, a);
                freq.iter()
                    .enumerate()
                    .map(|(i, f)| (f - q * weight(i + 1, a)).powi(2))
                    .sum::<f64>()
            };
            let a = golden_section(sse, EXPONENT_RANGE.0, EXPONENT_RANGE.1, 1e-12);
            (a, nls_scale(freq, a))
        }
        ZipfFitMethod::LogLog => {
            let pts: Vec<(f64, f64)> = freq
                .iter()
                .enumerate()
                .filter(|(_, f)| **f > 0.0)
                .map(|(i, f)| (((i + 1) as f64).ln(), f.ln()))
                .collect();
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
            let slope = sxy / sxx;
            (-slope - 1.0, (my - slope * mx).exp())
        }
        ZipfFitMethod::Mle => {
            let nll = |a: f64| {
                let z: f64 = (1..=k_max).map(|k| weight(k, a)).sum();
                freq.iter()
                    .enumerate()
                    .map(|(i, f)| if *f > 0.0 { -f * (weight(i + 1, a) / z).ln() } else { 0.0 })
                    .sum::<f64>()
            };
            let a = golden_section(nll, EXPONENT_RANGE.0, EXPONENT_RANGE.1, 1e-12);
            let z: f64 = (1..=k_max).map(|k| weight(k, a)).sum();
            (a, 1.0 / z)
        }
    };
    if !(exponent > 0.0) || exponent >= EXPONENT_RANGE.1 * 0.999 {
        return Err(Error::DegenerateFit(format!("size-law exponent {exponent} at the search boundary")));
    }
    ZipfSpec::new(exponent, scale.min(1.0), k_max)
}

fn weight(k: usize, a: f64) -> f64 {
    (k as f64).powf(-(1.0 + a))
}

/// Least-squares scale for a fixed exponent.
fn nls_scale(freq: &[f64], a: f64) -> f64 {
    let (num, den) = freq.iter().enumerate().fold((0.0, 0.0), |(n, d), (i, f)| {
        let w = weight(i + 1, a);
        (n + f * w, d + w * w)
    });
    num / den
}
