use rand::Rng;

use super::types::{Firm, InfectionRecord, InfectionSource};
use crate::error::{Error, Result};
use crate::stochproc::{cox_first_jump, BetaSeverity, CumulativeHazard, TimeGrid};

/// Draw infection times, recovery durations and severities for one firm.
///
/// Each subunit takes the first jump of its own Cox process with intensity `Y`. At the
/// firm's first hit `τ_i`, every sister whose own jump comes later is infected with
/// probability `a(τ_i)`; a failed draw leaves it with its own later jump. Recovery takes
/// `1 / γ_{K_i}(τ)` days. `a_path` and `gamma_path` hold one value per grid point and are
/// read at the left endpoint of the cell containing the time.
pub fn simulate_infection_times<R: Rng + ?Sized>(
    firm: &Firm,
    hazard: &CumulativeHazard,
    a_path: &[f64],
    gamma_path: &[f64],
    severity: &BetaSeverity,
    rng: &mut R,
) -> Result<InfectionRecord> {
    let grid = hazard.grid();
    Error::check_len("in-firm rate path", grid.len(), a_path.len())?;
    Error::check_len("recovery rate path", grid.len(), gamma_path.len())?;
    Ok(draw_record(firm.size(), hazard, a_path, gamma_path, severity, rng))
}

pub(crate) fn draw_record<R: Rng + ?Sized>(
    size: usize,
    hazard: &CumulativeHazard,
    a_path: &[f64],
    gamma_path: &[f64],
    severity: &BetaSeverity,
    rng: &mut R,
) -> InfectionRecord {
    let grid = hazard.grid();
    let never = grid.never();
    let mut tau = vec![never; size];
    let mut source = vec![InfectionSource::None; size];
    for j in 0..size {
        if let Some(t) = cox_first_jump(hazard, rng) {
            tau[j] = t;
            source[j] = InfectionSource::Primary;
        }
    }
    let first = tau.iter().copied().fold(f64::INFINITY, f64::min);
    if size > 1 && first <= grid.end() {
        let a = a_path[grid.cell_of(first)];
        for j in 0..size {
            if tau[j] > first && rng.random::<f64>() < a {
                tau[j] = first;
                source[j] = InfectionSource::Secondary;
            }
        }
    }
    let delta = tau
        .iter()
        .zip(&source)
        .map(|(&t, s)| match s {
            InfectionSource::None => 0.0,
            _ => 1.0 / gamma_path[grid.cell_of(t)],
        })
        .collect();
    let severity = (0..size).map(|_| severity.sample(rng)).collect();
    InfectionRecord {
        tau,
        delta,
        severity,
        source,
    }
}

/// Conditional marginal CDF of a subunit's infection time given the contagion path:
/// `F(u) = 1 - e^{-KΛ_u} - (K-1) e^{-Λ_u} ∫_0^u Y_s e^{-(K-1)Λ_s} (1 - a_s) ds`,
/// with `Y` and `a` held constant per grid cell so the integral is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTau {
    size: usize,
    hazard: CumulativeHazard,
    a: Vec<f64>,
    // correction integral at grid points
    correction: Vec<f64>,
}

impl MarginalTau {
    pub fn new(size: usize, hazard: &CumulativeHazard, a_path: &[f64]) -> Result<Self> {
        let grid = *hazard.grid();
        if size == 0 {
            return Err(Error::invalid("size", "must be >= 1"));
        }
        if a_path.len() != grid.len() && a_path.len() != grid.cells() {
            return Err(Error::LengthMismatch {
                what: "in-firm rate path",
                expected: grid.len(),
                got: a_path.len(),
            });
        }
        if a_path.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::invalid("a_path", "probabilities must lie in [0, 1]"));
        }
        let a = a_path[..grid.cells()].to_vec();
        let mut correction = Vec::with_capacity(grid.len());
        correction.push(0.0);
        let mut acc = 0.0;
        for c in 0..grid.cells() {
            acc += cell_integral(size, hazard.at_point(c), hazard.rate(c), grid.step()) * (1.0 - a[c]);
            correction.push(acc);
        }
        Ok(Self {
            size,
            hazard: hazard.clone(),
            a,
            correction,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.hazard.grid()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn locate(&self, u: f64) -> Option<(usize, f64)> {
        let g = self.grid();
        if u <= g.t0() {
            return None;
        }
        let u = u.min(g.end());
        let c = g.cell_of(u);
        Some((c, u - g.point(c)))
    }

    /// `Λ_u` and the correction integral at `u`.
    fn parts(&self, u: f64) -> (f64, f64) {
        match self.locate(u) {
            None => (0.0, 0.0),
            Some((c, dt)) => {
                let lam_c = self.hazard.at_point(c);
                let y = self.hazard.rate(c);
                let j = self.correction[c] + cell_integral(self.size, lam_c, y, dt) * (1.0 - self.a[c]);
                (lam_c + y * dt, j)
            }
        }
    }

    pub fn cdf(&self, u: f64) -> f64 {
        let (lam, j) = self.parts(u);
        let k = self.size as f64;
        let f = 1.0 - (-k * lam).exp() - (k - 1.0) * (-lam).exp() * j;
        f.clamp(0.0, 1.0)
    }

    /// `dF/du` inside a cell.
    pub fn density(&self, u: f64) -> f64 {
        let Some((c, _)) = self.locate(u) else {
            return 0.0;
        };
        let (lam, j) = self.parts(u);
        let y = self.hazard.rate(c);
        let k = self.size as f64;
        let ek = (-k * lam).exp();
        y * (k * ek - (k - 1.0) * (1.0 - self.a[c]) * ek + (k - 1.0) * (-lam).exp() * j)
    }
}

// ∫ y e^{-(K-1)(Λ_c + y s)} ds over s in [0, dt]
fn cell_integral(size: usize, lam_c: f64, y: f64, dt: f64) -> f64 {
    let m = (size - 1) as f64;
    if size == 1 {
        return y * dt;
    }
    let x = m * y * dt;
    let frac = if x < 1e-8 { y * dt * (1.0 - 0.5 * x) } else { -(-x).exp_m1() / m };
    (-m * lam_c).exp() * frac
}

/// Convenience wrapper evaluating [`MarginalTau::cdf`] once.
pub fn marginal_cdf_tau(size: usize, hazard: &CumulativeHazard, a_path: &[f64], u: f64) -> Result<f64> {
    Ok(MarginalTau::new(size, hazard, a_path)?.cdf(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::firm::Subunit;
    use crate::stochproc::RngStream;

    fn firm(k: usize) -> Firm {
        let s = Subunit {
            z0: 1.0,
            drift: 0.0,
            vol: 0.01,
        };
        Firm::new("f", "s", vec![s; k], 0.0).unwrap()
    }

    fn hazard(y: f64, days: usize) -> CumulativeHazard {
        CumulativeHazard::new(&vec![y; days + 1], &TimeGrid::daily(days).unwrap()).unwrap()
    }

    #[test]
    fn zero_force_means_no_infection() {
        let h = hazard(0.0, 50);
        let sev = BetaSeverity::new(50.0, 10.0).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..100 {
            let rec = simulate_infection_times(&firm(3), &h, &[0.5; 51], &[0.7; 51], &sev, &mut rng).unwrap();
            assert!(rec.tau.iter().all(|&t| t == 51.0));
            assert!(rec.source.iter().all(|s| *s == InfectionSource::None));
        }
        let m = MarginalTau::new(3, &h, &[0.5; 51]).unwrap();
        assert_eq!(m.cdf(30.0), 0.0);
    }

    #[test]
    fn two_subunit_closed_form() {
        let (lam, alpha) = (0.02, 0.3);
        let h = hazard(lam, 100);
        let m = MarginalTau::new(2, &h, &[alpha; 101]).unwrap();
        for u in [0.0, 0.5, 7.25, 50.0, 100.0] {
            let exact = 1.0 - (-2.0 * lam * u).exp() - (-lam * u).exp() * (1.0 - alpha) * (1.0 - (-lam * u).exp());
            assert!((m.cdf(u) - exact).abs() < 1e-8, "u={u}");
        }
    }

    #[test]
    fn single_subunit_is_exponential_law() {
        let y: Vec<f64> = (0..=100).map(|u| 0.01 + 0.0002 * u as f64).collect();
        let h = CumulativeHazard::new(&y, &TimeGrid::daily(100).unwrap()).unwrap();
        let m = MarginalTau::new(1, &h, &[0.2; 101]).unwrap();
        for u in [3.0, 33.3, 99.0] {
            assert!((m.cdf(u) - (1.0 - (-h.eval(u)).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn density_integrates_to_cdf() {
        let y: Vec<f64> = (0..=30).map(|u| 0.05 * (1.0 + (u as f64 / 5.0).sin())).collect();
        let a: Vec<f64> = (0..=30).map(|u| 0.3 + 0.01 * u as f64).collect();
        let h = CumulativeHazard::new(&y, &TimeGrid::daily(30).unwrap()).unwrap();
        let m = MarginalTau::new(4, &h, &a).unwrap();
        let mut acc = 0.0;
        for c in 0..30 {
            acc += crate::firm::quadrature::gauss_legendre(c as f64, c as f64 + 1.0, |u| m.density(u));
        }
        assert!((acc - m.cdf(30.0)).abs() < 1e-10);
    }

    #[test]
    fn secondary_infections_share_first_time() {
        let h = hazard(0.01, 100);
        let sev = BetaSeverity::new(2.0, 2.0).unwrap();
        let mut rng = RngStream::new(3, 0).rng();
        let mut seen = 0;
        for _ in 0..5000 {
            let rec = simulate_infection_times(&firm(5), &h, &[0.6; 101], &[0.5; 101], &sev, &mut rng).unwrap();
            let first = rec.first_infection();
            for j in 0..5 {
                if rec.source[j] == InfectionSource::Secondary {
                    seen += 1;
                    assert_eq!(rec.tau[j], first);
                    assert!(rec.source.iter().zip(&rec.tau).any(|(s, t)| *s == InfectionSource::Primary && *t == first));
                }
                if rec.is_infected(j) {
                    assert_eq!(rec.delta[j], 2.0);
                }
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn length_mismatch() {
        let h = hazard(0.01, 10);
        let sev = BetaSeverity::new(2.0, 2.0).unwrap();
        let mut rng = RngStream::new(3, 0).rng();
        assert!(simulate_infection_times(&firm(2), &h, &[0.5; 3], &[0.5; 11], &sev, &mut rng).is_err());
    }
}
