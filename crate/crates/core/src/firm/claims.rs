use super::infection::MarginalTau;
use super::quadrature::gauss_legendre;
use super::types::{Firm, InfectionRecord};
use crate::error::{Error, Result};
use crate::stochproc::TimeGrid;

/// Subunit revenue at the grid points: `(1 - π)` times the undisturbed path while
/// infected, the undisturbed path otherwise.
pub fn subunit_revenue(path: &[f64], record: &InfectionRecord, j: usize, grid: &TimeGrid) -> Vec<f64> {
    path.iter()
        .enumerate()
        .map(|(u, z)| {
            if record.is_active(j, grid.point(u)) {
                (1.0 - record.severity[j]) * z
            } else {
                *z
            }
        })
        .collect()
}

/// `c_{i,t} = Σ_j π_ij 1{τ_ij <= t < τ_ij + δ_ij} z̄_ij,t` at grid point `u`.
pub fn instantaneous_claim(paths: &[Vec<f64>], record: &InfectionRecord, grid: &TimeGrid, u: usize) -> f64 {
    let t = grid.point(u);
    paths
        .iter()
        .enumerate()
        .filter(|(j, _)| record.is_active(*j, t))
        .map(|(j, p)| record.severity[j] * p[u])
        .sum()
}

/// Claim accrued on `[t_from, t_to]` (grid indices): per cell and subunit, the
/// trapezoid rule on `[t_u ∨ τ, t_{u+1} ∧ (τ + δ)]` with the undisturbed revenue
/// interpolated linearly inside the cell.
pub fn period_claim(
    paths: &[Vec<f64>],
    record: &InfectionRecord,
    grid: &TimeGrid,
    from: usize,
    to: usize,
) -> Result<f64> {
    if from >= to || to > grid.cells() {
        return Err(Error::invalid(
            "interval",
            format!("need from < to <= {}, got [{from}, {to}]", grid.cells()),
        ));
    }
    Error::check_len("revenue paths", record.size(), paths.len())?;
    let mut total = 0.0;
    for (j, path) in paths.iter().enumerate() {
        if !record.is_infected(j) {
            continue;
        }
        for u in from..to {
            total += cell_claim(path, record, j, grid, u);
        }
    }
    Ok(total)
}

/// Per-cell claims summed over subunits: element `u` covers `[t_u, t_{u+1}]`.
pub(crate) fn daily_claims_into(paths: &[Vec<f64>], record: &InfectionRecord, grid: &TimeGrid, out: &mut [f64]) {
    for (j, path) in paths.iter().enumerate() {
        if !record.is_infected(j) {
            continue;
        }
        let start = grid.cell_of(record.tau[j]);
        let stop = grid.cell_of(record.tau[j] + record.delta[j]);
        for u in start..=stop {
            out[u] += cell_claim(path, record, j, grid, u);
        }
    }
}

#[inline]
fn cell_claim(path: &[f64], record: &InfectionRecord, j: usize, grid: &TimeGrid, u: usize) -> f64 {
    let (t0, t1) = (grid.point(u), grid.point(u + 1));
    let lo = t0.max(record.tau[j]);
    let hi = t1.min(record.tau[j] + record.delta[j]);
    if hi <= lo {
        return 0.0;
    }
    let slope = (path[u + 1] - path[u]) / (t1 - t0);
    let z = |t: f64| path[u] + slope * (t - t0);
    record.severity[j] * 0.5 * (hi - lo) * (z(lo) + z(hi))
}

/// `E[c_{i,t} | contagion path] = π⋆ Σ_j z_ij,0 e^{μ_ij t} · P(t - δ(τ) < τ <= t)`, with
/// the probability integrated exactly against the marginal CDF cell by cell.
pub fn conditional_expected_claim(
    firm: &Firm,
    marginal: &MarginalTau,
    gamma_path: &[f64],
    pi_star: f64,
    t: f64,
) -> Result<f64> {
    let grid = *marginal.grid();
    Error::check_len("recovery rate path", grid.len(), gamma_path.len())?;
    let mut mass = 0.0;
    for c in 0..grid.cells() {
        let (c0, c1) = (grid.point(c), grid.point(c + 1));
        if c0 >= t {
            break;
        }
        let lo = c0.max(t - 1.0 / gamma_path[c]);
        let hi = c1.min(t);
        if hi > lo {
            mass += marginal.cdf(hi) - marginal.cdf(lo);
        }
    }
    Ok(pi_star * firm.expected_revenue(t) * mass)
}

/// Expected claim of the firm over the whole horizon given the contagion path:
/// `Σ_j (π⋆ z_ij,0 / μ_ij) ∫_0^T (e^{μ_ij min(T, u + 1/γ_u)} - e^{μ_ij u}) dF(u)`.
pub fn expected_episode_claim(firm: &Firm, marginal: &MarginalTau, gamma_path: &[f64], pi_star: f64) -> Result<f64> {
    let grid = *marginal.grid();
    Error::check_len("recovery rate path", grid.len(), gamma_path.len())?;
    let horizon = grid.end();
    let mut total = 0.0;
    for s in firm.subunits() {
        let mu = s.drift;
        let g = |u: f64, delta: f64| {
            let end = horizon.min(u + delta);
            if mu.abs() < 1e-10 {
                end - u
            } else {
                ((mu * end).exp() - (mu * u).exp()) / mu
            }
        };
        let mut acc = 0.0;
        for c in 0..grid.cells() {
            let (c0, c1) = (grid.point(c), grid.point(c + 1));
            let delta = 1.0 / gamma_path[c];
            let kink = (horizon - delta).clamp(c0, c1);
            let f = |u: f64| marginal.density(u) * g(u, delta);
            acc += gauss_legendre(c0, kink, f) + gauss_legendre(kink, c1, f);
        }
        total += pi_star * s.z0 * acc;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::firm::{InfectionSource, Subunit};
    use crate::stochproc::CumulativeHazard;

    fn record(tau: f64, delta: f64, pi: f64) -> InfectionRecord {
        InfectionRecord {
            tau: vec![tau],
            delta: vec![delta],
            severity: vec![pi],
            source: vec![InfectionSource::Primary],
        }
    }

    fn never(grid: &TimeGrid) -> InfectionRecord {
        InfectionRecord {
            tau: vec![grid.never()],
            delta: vec![0.0],
            severity: vec![0.5],
            source: vec![InfectionSource::None],
        }
    }

    #[test]
    fn revenue_branches() {
        let grid = TimeGrid::daily(20).unwrap();
        let path: Vec<f64> = (0..=20).map(|u| 10.0 + u as f64).collect();
        let rec = record(10.0, 5.0, 0.5);
        let z = subunit_revenue(&path, &rec, 0, &grid);
        assert_eq!(z[12], 0.5 * path[12]);
        assert_eq!(z[16], path[16]);
        assert_eq!(z[15], path[15]);
        assert_eq!(subunit_revenue(&path, &never(&grid), 0, &grid), path);
        let full = subunit_revenue(&path, &record(10.0, 5.0, 1.0), 0, &grid);
        assert!(full[10..15].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn instantaneous_claim_matches_revenue_gap() {
        let grid = TimeGrid::daily(20).unwrap();
        let path: Vec<f64> = (0..=20).map(|u| 100.0 + u as f64).collect();
        let rec = record(3.0, 4.0, 0.8);
        for u in 0..=20 {
            let gap = path[u] - subunit_revenue(&path, &rec, 0, &grid)[u];
            assert!((instantaneous_claim(&[path.clone()], &rec, &grid, u) - gap).abs() < 1e-12);
        }
        let flat = vec![100.0; 21];
        assert_eq!(instantaneous_claim(&[flat], &rec, &grid, 5), 80.0);
        assert_eq!(instantaneous_claim(&[path], &never(&grid), &grid, 5), 0.0);
    }

    #[test]
    fn period_claim_trapezoid() {
        let grid = TimeGrid::daily(4).unwrap();
        let rec = record(0.0, 10.0, 1.0);
        assert_eq!(period_claim(&[vec![3.0; 5]], &rec, &grid, 1, 2).unwrap(), 3.0);
        let ramp = vec![0.0, 7.0, 7.0, 7.0, 7.0];
        assert_eq!(period_claim(&[ramp], &rec, &grid, 0, 1).unwrap(), 3.5);
        assert_eq!(period_claim(&[vec![3.0; 5]], &never(&grid), &grid, 0, 4).unwrap(), 0.0);
        assert!(period_claim(&[vec![3.0; 5]], &rec, &grid, 2, 2).is_err());
    }

    #[test]
    fn period_claim_is_additive() {
        let grid = TimeGrid::daily(30).unwrap();
        let path: Vec<f64> = (0..=30).map(|u| 5.0 * (0.01 * u as f64).exp()).collect();
        let rec = record(4.3, 6.55, 0.83);
        let whole = period_claim(&[path.clone()], &rec, &grid, 0, 30).unwrap();
        let pieces: f64 = (0..30).map(|u| period_claim(&[path.clone()], &rec, &grid, u, u + 1).unwrap()).sum();
        assert!((whole - pieces).abs() < 1e-12);
        let mut daily = vec![0.0; 30];
        daily_claims_into(&[path], &rec, &grid, &mut daily);
        assert!((daily.iter().sum::<f64>() - whole).abs() < 1e-12);
        // inside [4.3, 10.85]: partial first and last cells
        assert!(daily[3] == 0.0 && daily[4] > 0.0 && daily[10] > 0.0 && daily[11] == 0.0);
    }

    fn single_firm(mu: f64) -> Firm {
        Firm::new("f", "s", vec![Subunit { z0: 2.0, drift: mu, vol: 0.01 }], 0.0).unwrap()
    }

    #[test]
    fn expected_claims_vanish_without_force() {
        let grid = TimeGrid::daily(50).unwrap();
        let h = CumulativeHazard::new(&[0.0; 51], &grid).unwrap();
        let m = MarginalTau::new(1, &h, &[0.5; 51]).unwrap();
        let f = single_firm(0.001);
        assert_eq!(conditional_expected_claim(&f, &m, &[0.5; 51], 0.8, 20.0).unwrap(), 0.0);
        assert_eq!(expected_episode_claim(&f, &m, &[0.5; 51], 0.8).unwrap(), 0.0);
    }

    #[test]
    fn instant_recovery_means_no_expected_claim() {
        let grid = TimeGrid::daily(50).unwrap();
        let h = CumulativeHazard::new(&[0.05; 51], &grid).unwrap();
        let m = MarginalTau::new(1, &h, &[0.5; 51]).unwrap();
        let v = conditional_expected_claim(&single_firm(0.0), &m, &[1e12; 51], 0.8, 20.0).unwrap();
        assert!(v < 1e-10);
    }

    #[test]
    fn zero_drift_limit_matches_fine_quadrature() {
        let (lam, gamma, days) = (0.03, 0.3, 100usize);
        let grid = TimeGrid::daily(days).unwrap();
        let h = CumulativeHazard::new(&vec![lam; days + 1], &grid).unwrap();
        let m = MarginalTau::new(1, &h, &vec![0.5; days + 1]).unwrap();
        let got = expected_episode_claim(&single_firm(0.0), &m, &vec![gamma; days + 1], 0.8).unwrap();
        // midpoint rule on the exponential law with 1e6 slices
        let n = 1_000_000;
        let du = days as f64 / n as f64;
        let mut acc = 0.0;
        for s in 0..n {
            let u = (s as f64 + 0.5) * du;
            acc += lam * (-lam * u).exp() * (days as f64 - u).min(1.0 / gamma) * du;
        }
        assert!((got - 0.8 * 2.0 * acc).abs() < 1e-6, "{got} vs {}", 1.6 * acc);
    }
}
