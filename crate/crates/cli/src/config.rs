use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use contagion_core::calibration::{PanelSemantics, ThetaSpec};
use contagion_core::ZipfSpec;
use serde::{Deserialize, Serialize};

/// Every tunable of a run. Missing fields take their defaults, so a partial JSON
/// document is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub horizon_days: usize,
    pub n_scenarios: usize,
    pub n_outer: usize,
    pub upsilon: f64,
    pub severity: SeverityShape,
    /// Euler steps per day.
    pub substeps: usize,
    pub initial_infected_subunits: f64,
    pub panel_semantics: PanelSemantics,
    /// Draw AEP episode losses from the simulated pool instead of resimulating.
    pub bootstrap_aep: bool,
    /// Loss thresholds (MEUR); an even grid up to the largest simulated loss when empty.
    pub thresholds: Vec<f64>,
    pub aep_points: usize,
    /// Size law used when no revenue panel is given.
    pub zipf: ZipfSpec,
    /// Coefficients used by `simulate`, `cdf` and `aep` when no theta file exists.
    pub theta: Option<ThetaSpec>,
    pub calibration: CalibrationSettings,
    pub synth: SyntheticSpec,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            horizon_days: 100,
            n_scenarios: 10_000,
            n_outer: 10_000,
            upsilon: 0.105,
            severity: SeverityShape { alpha: 50.0, beta: 10.0 },
            substeps: 1,
            initial_infected_subunits: 49.0,
            panel_semantics: PanelSemantics::CurrentlyInfected,
            bootstrap_aep: false,
            thresholds: Vec::new(),
            aep_points: 201,
            zipf: ZipfSpec {
                exponent: 1.759_21,
                scale: 0.784_19,
                max_size: 12,
            },
            theta: None,
            calibration: CalibrationSettings::default(),
            synth: SyntheticSpec::default(),
            paths: Paths::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.n_scenarios == 0 {
            bail!("n_scenarios must be >= 1");
        }
        if self.n_outer == 0 {
            bail!("n_outer must be >= 1");
        }
        if self.horizon_days == 0 {
            bail!("horizon_days must be >= 1");
        }
        if self.substeps == 0 {
            bail!("substeps must be >= 1");
        }
        if !(self.severity.alpha > 0.0 && self.severity.beta > 0.0) {
            bail!("severity shapes must be > 0");
        }
        if !(self.upsilon.is_finite() && self.upsilon >= 0.0) {
            bail!("upsilon must be >= 0");
        }
        if !(self.initial_infected_subunits >= 0.0) {
            bail!("initial_infected_subunits must be >= 0");
        }
        if self.aep_points < 2 {
            bail!("aep_points must be >= 2");
        }
        ZipfSpec::new(self.zipf.exponent, self.zipf.scale, self.zipf.max_size).context("zipf")?;
        if let Some(t) = &self.theta {
            t.validate().context("theta")?;
        }
        self.calibration.validate()?;
        self.synth.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeverityShape {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSettings {
    /// Scenarios per objective evaluation.
    pub scenarios: usize,
    pub starts: usize,
    pub max_evals: usize,
    pub h_ref: f64,
    /// Optional first start.
    pub initial: Option<ThetaSpec>,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            scenarios: 100,
            starts: 8,
            max_evals: 3_000,
            h_ref: 10_000.0,
            initial: None,
        }
    }
}

impl CalibrationSettings {
    fn validate(&self) -> anyhow::Result<()> {
        if self.scenarios == 0 || self.starts == 0 || self.max_evals == 0 {
            bail!("calibration scenarios, starts and max_evals must be >= 1");
        }
        if !(self.h_ref > 0.0) {
            bail!("calibration h_ref must be > 0");
        }
        Ok(())
    }
}

/// Stand-in for the proprietary firm and incident data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_firms: usize,
    pub zipf: ZipfSpec,
    pub years: usize,
    pub first_year: i32,
    /// Annual revenue per subunit in the first year (MEUR), drawn uniformly.
    pub revenue_per_subunit: (f64, f64),
    pub drift_annual: (f64, f64),
    pub vol_annual: (f64, f64),
    pub sectors: Vec<(String, f64)>,
    pub theta: ThetaSpec,
    /// Scenarios averaged into the infection panel.
    pub panel_scenarios: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_firms: 2_929,
            zipf: ZipfSpec {
                exponent: 1.759_21,
                scale: 0.784_19,
                max_size: 12,
            },
            years: 5,
            first_year: 2019,
            revenue_per_subunit: (2.0, 10.0),
            drift_annual: (0.0, 0.15),
            vol_annual: (0.05, 0.3),
            sectors: vec![
                ("manufacturing".into(), 0.3),
                ("services".into(), 0.3),
                ("retail".into(), 0.2),
                ("health".into(), 0.1),
                ("public".into(), 0.1),
            ],
            theta: ThetaSpec::reference(),
            panel_scenarios: 100,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> anyhow::Result<()> {
        if self.n_firms == 0 || self.panel_scenarios == 0 {
            bail!("synth n_firms and panel_scenarios must be >= 1");
        }
        if self.years < 3 {
            bail!("synth years must be >= 3");
        }
        for (name, (lo, hi)) in [
            ("revenue_per_subunit", self.revenue_per_subunit),
            ("drift_annual", self.drift_annual),
            ("vol_annual", self.vol_annual),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                bail!("synth {name} must be an ordered finite range");
            }
        }
        if !(self.revenue_per_subunit.0 > 0.0 && self.vol_annual.0 > 0.0) {
            bail!("synth revenue and volatility ranges must be positive");
        }
        if self.sectors.is_empty() || self.sectors.iter().any(|s| !(s.1 >= 0.0)) || self.sectors.iter().all(|s| s.1 == 0.0) {
            bail!("synth sectors need non-negative shares, not all zero");
        }
        ZipfSpec::new(self.zipf.exponent, self.zipf.scale, self.zipf.max_size).context("synth zipf")?;
        self.theta.validate().context("synth theta")?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub revenues: PathBuf,
    pub infections: PathBuf,
    pub sector_rates: PathBuf,
    pub portfolio: PathBuf,
    pub theta: PathBuf,
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            revenues: "data/revenues.csv".into(),
            infections: "data/infections.csv".into(),
            sector_rates: "data/sector_rates.csv".into(),
            portfolio: "data/portfolio.csv".into(),
            theta: "out/theta.json".into(),
            output_dir: "out".into(),
        }
    }
}
