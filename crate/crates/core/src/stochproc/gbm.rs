use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::TimeGrid;
use crate::error::{Error, Result};

/// Geometric Brownian motion sampled exactly at the grid points.
///
/// `shocks[u]` is the standard normal increment driving cell `u`; pass one per cell.
pub fn gbm_path(z0: f64, drift: f64, vol: f64, grid: &TimeGrid, shocks: &[f64]) -> Result<Vec<f64>> {
    if !(z0.is_finite() && z0 > 0.0) {
        return Err(Error::invalid("z0", format!("must be > 0, got {z0}")));
    }
    if !(vol.is_finite() && vol >= 0.0) {
        return Err(Error::invalid("vol", format!("must be >= 0, got {vol}")));
    }
    Error::check_len("shocks", grid.cells(), shocks.len())?;
    let dt = grid.step();
    let det = (drift - 0.5 * vol * vol) * dt;
    let diff = vol * dt.sqrt();
    let mut path = Vec::with_capacity(grid.len());
    // accumulate the exponent rather than the level so long horizons stay exact
    let mut log_level = 0.0;
    path.push(z0);
    for &e in shocks {
        log_level += det + diff * e;
        path.push(z0 * log_level.exp());
    }
    Ok(path)
}

/// `k` standard normals with pairwise correlation `rho`, built from one common factor
/// plus idiosyncratic deviations around the sample mean.
pub fn equicorrelated_normals<R: Rng + ?Sized>(k: usize, rho: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_rho(k, rho)?;
    let eps: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
    Ok(combine(&eps, rho))
}

/// Shocks for `k` subunits over `cells` steps, indexed `[subunit][cell]`.
pub fn correlated_shocks<R: Rng + ?Sized>(
    k: usize,
    rho: f64,
    cells: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    check_rho(k, rho)?;
    let mut out = vec![Vec::with_capacity(cells); k];
    let mut eps = vec![0.0; k];
    for _ in 0..cells {
        for e in eps.iter_mut() {
            *e = StandardNormal.sample(rng);
        }
        for (row, x) in out.iter_mut().zip(combine(&eps, rho)) {
            row.push(x);
        }
    }
    Ok(out)
}

fn check_rho(k: usize, rho: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k", "need at least one component"));
    }
    let lower = if k > 1 { -1.0 / (k as f64 - 1.0) } else { -1.0 };
    if !(rho.is_finite() && rho >= lower - 1e-12 && rho <= 1.0) {
        return Err(Error::invalid(
            "rho",
            format!("must lie in [{lower}, 1] for {k} components, got {rho}"),
        ));
    }
    Ok(())
}

fn combine(eps: &[f64], rho: f64) -> Vec<f64> {
    let k = eps.len() as f64;
    let mean = eps.iter().sum::<f64>() / k;
    let common = ((1.0 + (k - 1.0) * rho).max(0.0) / k).sqrt() * k.sqrt() * mean;
    let idio = (1.0 - rho).max(0.0).sqrt();
    eps.iter().map(|e| idio * (e - mean) + common).collect()
}
