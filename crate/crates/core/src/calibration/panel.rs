use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed infected firm counts, `counts[day][k - 1]`, day 0 first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfectionPanel {
    counts: Vec<Vec<f64>>,
}

impl InfectionPanel {
    pub fn new(counts: Vec<Vec<f64>>) -> Result<Self> {
        let first = counts.first().ok_or(Error::Empty("infection panel"))?;
        let k = first.len();
        if k == 0 {
            return Err(Error::Empty("infection panel sizes"));
        }
        for row in &counts {
            Error::check_len("panel row", k, row.len())?;
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v >= 0.0 && v.fract() == 0.0)) {
                return Err(Error::invalid("counts", format!("must be non-negative integers, got {v}")));
            }
        }
        Ok(Self { counts })
    }

    /// Build from `(day, size, count)` triples; missing cells are zero.
    pub fn from_triples(rows: &[(usize, usize, f64)], max_size: usize) -> Result<Self> {
        let days = rows.iter().map(|r| r.0).max().ok_or(Error::Empty("infection panel"))? + 1;
        let mut counts = vec![vec![0.0; max_size]; days];
        for &(d, k, c) in rows {
            if k == 0 || k > max_size {
                return Err(Error::invalid("size", format!("{k} outside 1..={max_size}")));
            }
            counts[d][k - 1] += c;
        }
        Self::new(counts)
    }

    pub fn counts(&self) -> &[Vec<f64>] {
        &self.counts
    }

    /// Number of observed days including day 0.
    pub fn days(&self) -> usize {
        self.counts.len()
    }

    pub fn max_size(&self) -> usize {
        self.counts[0].len()
    }

    pub fn initial(&self) -> &[f64] {
        &self.counts[0]
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().flatten().sum()
    }

    pub fn triples(&self) -> Vec<(usize, usize, f64)> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(d, row)| row.iter().enumerate().map(move |(k, c)| (d, k + 1, *c)))
            .collect()
    }
}

/// Infected-firm counts by sector and size from one day's total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxyAllocation {
    pub sectors: Vec<String>,
    /// `cells[sector][k - 1]`.
    pub cells: Vec<Vec<u64>>,
}

impl ProxyAllocation {
    pub fn by_size(&self) -> Vec<u64> {
        let k = self.cells.first().map_or(0, Vec::len);
        (0..k).map(|j| self.cells.iter().map(|row| row[j]).sum()).collect()
    }

    pub fn by_sector(&self) -> Vec<u64> {
        self.cells.iter().map(|row| row.iter().sum()).collect()
    }
}

/// Firm counts by sector (rows) and size (columns) of the reference population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSizeTable {
    pub sectors: Vec<String>,
    pub counts: Vec<Vec<f64>>,
}

/// Split `total` infected firms over sectors by `rates` (sector share of infections)
/// and within each sector over sizes by the table's size profile. Both stages use
/// largest-remainder rounding, so sector totals are within one firm of `rate · total`.
pub fn infection_proxy(rates: &[(String, f64)], total: u64, table: &SectorSizeTable) -> Result<ProxyAllocation> {
    Error::check_len("sector table rows", table.sectors.len(), table.counts.len())?;
    if rates.is_empty() {
        return Err(Error::Empty("sector rates"));
    }
    if let Some((s, r)) = rates.iter().find(|(_, r)| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::invalid("sector rate", format!("{s}: {r}")));
    }
    let rate_sum: f64 = rates.iter().map(|r| r.1).sum();
    if !(rate_sum > 0.0) {
        return Err(Error::invalid("sector rates", "must not all be zero"));
    }
    let profiles = rates
        .iter()
        .map(|(name, _)| {
            let row = table
                .sectors
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| Error::invalid("sector", format!("{name} missing from the size table")))?;
            Ok(&table.counts[row])
        })
        .collect::<Result<Vec<_>>>()?;

    let sector_targets: Vec<f64> = rates.iter().map(|r| total as f64 * r.1 / rate_sum).collect();
    let sector_totals = largest_remainder(&sector_targets, total);
    let cells = profiles
        .iter()
        .zip(&sector_totals)
        .map(|(profile, &n)| {
            let mass: f64 = profile.iter().sum();
            if n > 0 && !(mass > 0.0) {
                return Err(Error::invalid("size table", "sector with infections has no firms"));
            }
            let targets: Vec<f64> = profile.iter().map(|c| if mass > 0.0 { n as f64 * c / mass } else { 0.0 }).collect();
            Ok(largest_remainder(&targets, n))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProxyAllocation {
        sectors: rates.iter().map(|r| r.0.clone()).collect(),
        cells,
    })
}

/// Integers summing to `total`, each the floor or ceiling of its target.
fn largest_remainder(targets: &[f64], total: u64) -> Vec<u64> {
    let mut out: Vec<u64> = targets.iter().map(|t| t.floor() as u64).collect();
    let assigned: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| (targets[b] - targets[b].floor()).total_cmp(&(targets[a] - targets[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle().take(total.saturating_sub(assigned) as usize) {
        out[i] += 1;
    }
    out
}
