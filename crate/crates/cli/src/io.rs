//! CSV and JSON files. Currency columns are in millions of euros; every written file
//! starts with a `#` comment line stating its units, and readers skip such lines.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use contagion_core::calibration::{FirmRevenue, InfectionPanel};
use contagion_core::{Firm, Subunit};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevenueRow {
    pub firm_id: String,
    pub sector: String,
    pub year: i32,
    pub revenue_meur: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfectionRow {
    pub day: usize,
    pub size: usize,
    pub count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorRateRow {
    pub sector: String,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioRow {
    pub firm_id: String,
    pub sector: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub rho: f64,
    pub subunit_idx: usize,
    pub z0: f64,
    pub mu_daily: f64,
    pub sigma_daily: f64,
}

/// Deserialized rows with their 1-based line numbers.
pub fn read_rows<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<(u64, T)>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|e| anyhow!("{}: {e}", path.display()))?.clone();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| anyhow!("{}: {e}", path.display()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: T = rec
            .deserialize(Some(&headers))
            .map_err(|e| anyhow!("{} line {line}: {e}", path.display()))?;
        rows.push((line, row));
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(rows)
}

pub fn write_rows<T: Serialize>(path: &Path, units: &str, rows: impl IntoIterator<Item = T>) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let mut file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    writeln!(file, "# {units}")?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))
}

pub fn read_infections(path: &Path, max_size: usize) -> anyhow::Result<InfectionPanel> {
    let rows: Vec<(u64, InfectionRow)> = read_rows(path)?;
    let mut triples = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        if !(r.count.is_finite() && r.count >= 0.0 && r.count.fract() == 0.0) {
            bail!("{} line {line}: count must be a non-negative integer, got {}", path.display(), r.count);
        }
        if r.size == 0 || r.size > max_size {
            bail!("{} line {line}: size {} outside 1..={max_size}", path.display(), r.size);
        }
        triples.push((r.day, r.size, r.count));
    }
    if !triples.iter().any(|t| t.0 == 0) {
        bail!("{}: no rows for day 0", path.display());
    }
    InfectionPanel::from_triples(&triples, max_size).map_err(|e| anyhow!("{}: {e}", path.display()))
}

pub fn write_infections(path: &Path, panel: &InfectionPanel) -> anyhow::Result<()> {
    let rows = panel.triples().into_iter().map(|(day, size, count)| InfectionRow { day, size, count });
    write_rows(path, "infected firms per day and size", rows)
}

/// Firms in order of first appearance, years sorted.
pub fn read_revenues(path: &Path) -> anyhow::Result<Vec<FirmRevenue>> {
    let rows: Vec<(u64, RevenueRow)> = read_rows(path)?;
    let mut firms: Vec<(FirmRevenue, Vec<i32>)> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for (line, r) in rows {
        if !(r.revenue_meur.is_finite() && r.revenue_meur > 0.0) {
            bail!("{} line {line}: revenue_meur must be > 0, got {}", path.display(), r.revenue_meur);
        }
        let slot = *index.entry(r.firm_id.clone()).or_insert_with(|| {
            firms.push((
                FirmRevenue {
                    id: r.firm_id.clone(),
                    sector: r.sector.clone(),
                    revenues: Vec::new(),
                },
                Vec::new(),
            ));
            firms.len() - 1
        });
        let (firm, years) = &mut firms[slot];
        if firm.sector != r.sector {
            bail!("{} line {line}: firm {} changes sector", path.display(), r.firm_id);
        }
        if years.contains(&r.year) {
            bail!("{} line {line}: firm {} has year {} twice", path.display(), r.firm_id, r.year);
        }
        years.push(r.year);
        firm.revenues.push(r.revenue_meur);
    }
    Ok(firms
        .into_iter()
        .map(|(mut f, years)| {
            let mut pairs: Vec<(i32, f64)> = years.into_iter().zip(f.revenues).collect();
            pairs.sort_by_key(|p| p.0);
            f.revenues = pairs.into_iter().map(|p| p.1).collect();
            f
        })
        .collect())
}

pub fn read_sector_rates(path: &Path) -> anyhow::Result<Vec<(String, f64)>> {
    let rows: Vec<(u64, SectorRateRow)> = read_rows(path)?;
    rows.into_iter()
        .map(|(line, r)| {
            if !(r.share.is_finite() && r.share >= 0.0) {
                bail!("{} line {line}: share must be >= 0, got {}", path.display(), r.share);
            }
            Ok((r.sector, r.share))
        })
        .collect()
}

pub fn read_portfolio(path: &Path) -> anyhow::Result<Vec<Firm>> {
    let rows: Vec<(u64, PortfolioRow)> = read_rows(path)?;
    let mut firms = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let (line, head) = &rows[i];
        if head.k == 0 || i + head.k > rows.len() {
            bail!("{} line {line}: firm {} declares K = {} subunits", path.display(), head.firm_id, head.k);
        }
        let mut subunits = Vec::with_capacity(head.k);
        for (j, (l, r)) in rows[i..i + head.k].iter().enumerate() {
            if r.firm_id != head.firm_id || r.k != head.k || r.subunit_idx != j || r.rho != head.rho || r.sector != head.sector {
                bail!(
                    "{} line {l}: expected subunit {j} of firm {} (K = {}, rows of a firm must be contiguous)",
                    path.display(),
                    head.firm_id,
                    head.k
                );
            }
            subunits.push(Subunit {
                z0: r.z0,
                drift: r.mu_daily,
                vol: r.sigma_daily,
            });
        }
        let firm = Firm::new(head.firm_id.clone(), head.sector.clone(), subunits, head.rho)
            .map_err(|e| anyhow!("{} line {line}: {e}", path.display()))?;
        firms.push(firm);
        i += head.k;
    }
    Ok(firms)
}

pub fn portfolio_rows(firms: &[Firm]) -> Vec<PortfolioRow> {
    firms
        .iter()
        .flat_map(|f| {
            f.subunits().iter().enumerate().map(move |(j, s)| PortfolioRow {
                firm_id: f.id.clone(),
                sector: f.sector.clone(),
                k: f.size(),
                rho: f.rho(),
                subunit_idx: j,
                z0: s.z0,
                mu_daily: s.drift,
                sigma_daily: s.vol,
            })
        })
        .collect()
}

pub fn write_portfolio(path: &Path, firms: &[Firm]) -> anyhow::Result<()> {
    write_rows(path, "z0 in MEUR per day; mu_daily and sigma_daily per day", portfolio_rows(firms))
}
