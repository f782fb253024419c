use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::firm::{Firm, Subunit};

/// Smallest daily volatility handed to a subunit; flat revenue series hit it.
pub const SIGMA_FLOOR: f64 = 1e-8;
const DAYS_PER_YEAR: f64 = 365.0;

/// Annual revenue history of one firm, oldest year first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmRevenue {
    pub id: String,
    pub sector: String,
    pub revenues: Vec<f64>,
}

/// Black-Scholes coefficients from a yearly series, in annual and daily units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsEstimate {
    pub mu_year: f64,
    pub sigma_year: f64,
    pub mu_daily: f64,
    pub sigma_daily: f64,
    pub floored: bool,
}

/// Moment estimates from yearly log-returns `r_t`: `σ² = mean (r - r̄)²`,
/// `μ = r̄ + σ²/2`. Daily units divide by 365 and √365.
pub fn estimate_bs(series: &[f64]) -> Result<BsEstimate> {
    if series.len() < 3 {
        return Err(Error::invalid("revenues", format!("need at least 3 years, got {}", series.len())));
    }
    if let Some(v) = series.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::invalid("revenues", format!("must be positive, got {v}")));
    }
    let r: Vec<f64> = series.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    let sigma_year = (r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mu_year = mean + 0.5 * sigma_year * sigma_year;
    let mut sigma_daily = sigma_year / DAYS_PER_YEAR.sqrt();
    let floored = sigma_daily < SIGMA_FLOOR;
    if floored {
        log::warn!("revenue volatility {sigma_daily:e} floored at {SIGMA_FLOOR:e}");
        sigma_daily = SIGMA_FLOOR;
    }
    Ok(BsEstimate {
        mu_year,
        sigma_year,
        mu_daily: mu_year / DAYS_PER_YEAR,
        sigma_daily,
        floored,
    })
}

/// Firm proxies from a revenue panel: size `⌈Z_i1 / Z̄_1⌉` against the first-year
/// mean, revenue split evenly over subunits, full intra-firm correlation, and daily
/// revenue taken from the last observed year.
pub fn build_firm_proxy(panel: &[FirmRevenue]) -> Result<Vec<Firm>> {
    if panel.is_empty() {
        return Err(Error::Empty("revenue panel"));
    }
    let first_mean = panel
        .iter()
        .map(|f| f.revenues.first().copied().unwrap_or(f64::NAN))
        .sum::<f64>()
        / panel.len() as f64;
    if !(first_mean.is_finite() && first_mean > 0.0) {
        return Err(Error::invalid("revenues", "first-year mean must be positive"));
    }
    panel
        .iter()
        .map(|f| {
            let est = estimate_bs(&f.revenues).map_err(|e| Error::invalid("revenues", format!("firm {}: {e}", f.id)))?;
            let ratio = f.revenues[0] / first_mean;
            let k = ((ratio - 1e-9).ceil() as usize).max(1);
            let last = *f.revenues.last().expect("checked length");
            let sub = Subunit {
                z0: last / k as f64 / DAYS_PER_YEAR,
                drift: est.mu_daily,
                vol: est.sigma_daily,
            };
            Firm::new(f.id.clone(), f.sector.clone(), vec![sub; k], 1.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series_has_zero_volatility() {
        let g: f64 = 1.07;
        let series: Vec<f64> = (0..6).map(|t| 100.0 * g.powi(t)).collect();
        let e = estimate_bs(&series).unwrap();
        assert!(e.floored);
        assert_eq!(e.sigma_daily, SIGMA_FLOOR);
        assert!((e.mu_year - g.ln()).abs() < 1e-12);
        assert!((e.mu_daily * 365.0 - g.ln()).abs() < 1e-12);
    }

    #[test]
    fn alternating_series_by_hand() {
        let e1 = std::f64::consts::E;
        let e = estimate_bs(&[1.0, e1, 1.0, e1, 1.0]).unwrap();
        // returns +1, -1, +1, -1
        assert!((e.sigma_year - 1.0).abs() < 1e-12);
        assert!((e.mu_year - 0.5).abs() < 1e-12);
        assert!((e.sigma_daily - 1.0 / 365f64.sqrt()).abs() < 1e-12);
        assert!(!e.floored);
    }

    #[test]
    fn proxy_sizes_and_splits() {
        let panel = vec![
            FirmRevenue { id: "a".into(), sector: "x".into(), revenues: vec![100.0, 110.0, 120.0] },
            FirmRevenue { id: "b".into(), sector: "x".into(), revenues: vec![100.0, 90.0, 95.0] },
            FirmRevenue { id: "c".into(), sector: "y".into(), revenues: vec![400.0, 420.0, 365.0 * 3.0] },
        ];
        // first-year mean 200: sizes 1, 1, 2
        let firms = build_firm_proxy(&panel).unwrap();
        assert_eq!(firms.iter().map(Firm::size).collect::<Vec<_>>(), [1, 1, 2]);
        let c = &firms[2];
        assert!((c.subunits()[0].z0 - 1.5).abs() < 1e-12);
        assert_eq!(c.rho(), 1.0);
        assert_eq!(c.subunits()[0], c.subunits()[1]);

        let same = vec![
            FirmRevenue { id: "a".into(), sector: "x".into(), revenues: vec![0.1, 0.2, 0.3] },
            FirmRevenue { id: "b".into(), sector: "x".into(), revenues: vec![0.1, 0.3, 0.2] },
            FirmRevenue { id: "c".into(), sector: "x".into(), revenues: vec![0.1, 0.1, 0.4] },
        ];
        assert!(build_firm_proxy(&same).unwrap().iter().all(|f| f.size() == 1));
    }

    #[test]
    fn bad_series_rejected() {
        assert!(estimate_bs(&[1.0, 2.0]).is_err());
        assert!(estimate_bs(&[1.0, 0.0, 2.0]).is_err());
        assert!(build_firm_proxy(&[]).is_err());
    }
}
