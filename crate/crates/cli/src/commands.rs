use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use contagion_core::calibration::{
    allocate_populations, build_firm_proxy, calibrate, fit_zipf, CalibrationConfig, NelderMeadOptions,
    ObjectiveConfig, StartResult, ThetaSpec, PARAMETER_NAMES,
};
use contagion_core::portfolio::{
    aep_approx, aep_bootstrap, aep_exact, distribution_summary, episode_loss, expected_output, poisson_frequencies,
    simulate_scenario, DistributionSummary, EpisodeModel,
};
use contagion_core::sir::{allocate_initial_infected, initial_state, peak, trajectory_rows, Peak, TrajectoryMean};
use contagion_core::stochproc::BetaSeverity;
use contagion_core::{AepConfig, Firm, LossDistribution, RngStream, TimeGrid, ZipfSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::io;

/// Successful outcome of a command; warnings map to exit code 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Warning,
}

/// Scenarios per parallel work unit; fixed so results do not depend on the thread count.
const CHUNK: usize = 250;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaFile {
    pub theta: ThetaSpec,
    pub zipf: ZipfSpec,
    pub seed: u64,
    #[serde(default)]
    pub diagnostics: Option<FitDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub j2: f64,
    pub converged: bool,
    pub identifiable: bool,
    pub flat_directions: Vec<String>,
    pub dispersion: BTreeMap<String, f64>,
    pub scenarios_per_evaluation: usize,
    pub starts: Vec<StartResult>,
    pub trace: Vec<f64>,
}

pub fn cmd_calibrate(cfg: &RunConfig) -> anyhow::Result<Status> {
    let zipf = if cfg.paths.revenues.exists() {
        let panel = io::read_revenues(&cfg.paths.revenues)?;
        let firms = build_firm_proxy(&panel).map_err(|e| anyhow!("{}: {e}", cfg.paths.revenues.display()))?;
        let sizes: Vec<usize> = firms.iter().map(Firm::size).collect();
        let k_max = sizes.iter().copied().max().unwrap_or(1);
        let zipf = fit_zipf(&sizes, k_max).context("size-law fit on the revenue proxies")?;
        log::info!(
            "{} firms, sizes 1..={k_max}, size law a = {:.4}, q = {:.4}",
            firms.len(),
            zipf.exponent,
            zipf.scale
        );
        io::write_portfolio(&cfg.paths.output_dir.join("proxy_portfolio.csv"), &firms)?;
        zipf
    } else {
        log::info!("no revenue panel at {}; using the configured size law", cfg.paths.revenues.display());
        cfg.zipf
    };
    let panel = io::read_infections(&cfg.paths.infections, zipf.max_size)?;
    let c = &cfg.calibration;
    let cal = CalibrationConfig {
        objective: ObjectiveConfig {
            scenarios: c.scenarios,
            h_ref: c.h_ref,
            semantics: cfg.panel_semantics,
            substeps: cfg.substeps,
            seed: cfg.seed,
            ..Default::default()
        },
        starts: c.starts,
        nelder_mead: NelderMeadOptions {
            max_evals: c.max_evals,
            ..Default::default()
        },
        seed: cfg.seed,
        initial: c.initial,
        ..Default::default()
    };
    log::info!(
        "calibrating on {} days x {} sizes, {} scenarios per evaluation, {} starts",
        panel.days(),
        panel.max_size(),
        c.scenarios,
        c.starts
    );
    let res = calibrate(&panel, &zipf, &cal)?;
    log::info!("J2 = {:.4e}, converged = {}, identifiable = {}", res.j2, res.converged, res.identifiable);
    let file = ThetaFile {
        theta: res.theta,
        zipf,
        seed: cfg.seed,
        diagnostics: Some(FitDiagnostics {
            j2: res.j2,
            converged: res.converged,
            identifiable: res.identifiable,
            flat_directions: res.flat_directions.clone(),
            dispersion: PARAMETER_NAMES.iter().map(|n| n.to_string()).zip(res.dispersion).collect(),
            scenarios_per_evaluation: c.scenarios,
            starts: res.starts,
            trace: res.trace,
        }),
    };
    io::write_json(&cfg.paths.theta, &file)?;
    if !res.converged {
        log::warn!("calibration did not converge");
        return Ok(Status::Warning);
    }
    if !res.identifiable {
        log::warn!("objective is flat in {:?}", res.flat_directions);
    }
    Ok(Status::Ok)
}

/// Calibrated coefficients from the theta file, else from the config.
pub fn load_theta(cfg: &RunConfig) -> anyhow::Result<(ThetaSpec, ZipfSpec)> {
    if cfg.paths.theta.exists() {
        let file: ThetaFile = io::read_json(&cfg.paths.theta)?;
        file.theta.validate().map_err(|e| anyhow!("{}: {e}", cfg.paths.theta.display()))?;
        return Ok((file.theta, file.zipf));
    }
    match cfg.theta {
        Some(t) => Ok((t, cfg.zipf)),
        None => bail!(
            "no coefficients: {} does not exist and the config has no theta (run calibrate first)",
            cfg.paths.theta.display()
        ),
    }
}

pub fn build_model(cfg: &RunConfig, theta: &ThetaSpec, zipf: &ZipfSpec) -> anyhow::Result<EpisodeModel> {
    let populations: Vec<f64> = allocate_populations(theta.h_star, zipf)?.into_iter().map(|h| h as f64).collect();
    let infected = allocate_initial_infected(&populations, cfg.initial_infected_subunits)?;
    let initial = initial_state(&populations, &infected)?;
    let env = theta.environment(zipf.max_size)?;
    let grid = TimeGrid::daily(cfg.horizon_days)?;
    let severity = BetaSeverity::new(cfg.severity.alpha, cfg.severity.beta)?;
    let mut model = EpisodeModel::new(env, initial, populations, grid, severity)?;
    model.substeps = cfg.substeps;
    Ok(model)
}

fn load_portfolio(cfg: &RunConfig, zipf: &ZipfSpec) -> anyhow::Result<Vec<Firm>> {
    let firms = io::read_portfolio(&cfg.paths.portfolio)?;
    if let Some(f) = firms.iter().find(|f| f.size() > zipf.max_size) {
        bail!(
            "{}: firm {} has {} subunits, above the largest modelled size {}",
            cfg.paths.portfolio.display(),
            f.id,
            f.size(),
            zipf.max_size
        );
    }
    Ok(firms)
}

/// Per-size infection statistics accumulated over scenarios.
#[derive(Debug, Clone, Default)]
struct SizeTally {
    firms: f64,
    hit: f64,
    first_day: f64,
    subunits: f64,
}

struct Chunk {
    mean: TrajectoryMean,
    losses: Vec<f64>,
    daily: Vec<Vec<f64>>,
    shortfall: Vec<f64>,
    tally: BTreeMap<usize, SizeTally>,
}

struct EpisodeRun {
    mean: TrajectoryMean,
    losses: Vec<f64>,
    daily: Vec<Vec<f64>>,
    mean_shortfall: Vec<f64>,
    tally: BTreeMap<usize, SizeTally>,
}

fn run_episodes(model: &EpisodeModel, firms: &[Firm], master: RngStream, n: usize, keep_daily: bool) -> anyhow::Result<EpisodeRun> {
    let grid = model.grid;
    let chunks: Vec<Chunk> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut out = Chunk {
                mean: TrajectoryMean::new(),
                losses: Vec::new(),
                daily: Vec::new(),
                shortfall: vec![0.0; grid.len()],
                tally: BTreeMap::new(),
            };
            for m in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let o = simulate_scenario(model, firms, master.stream(m as u64))?;
                out.mean.add(&o.trajectory);
                out.losses.push(episode_loss(&o));
                out.shortfall.iter_mut().zip(&o.shortfall).for_each(|(a, b)| *a += b);
                for (firm, rec) in firms.iter().zip(&o.records) {
                    let t = out.tally.entry(firm.size()).or_default();
                    t.firms += 1.0;
                    let first = rec.first_infection();
                    if first <= grid.end() {
                        t.hit += 1.0;
                        t.first_day += first;
                        t.subunits += (0..firm.size()).filter(|&j| rec.is_infected(j)).count() as f64;
                    }
                }
                if keep_daily {
                    out.daily.push(o.daily_losses);
                }
            }
            Ok(out)
        })
        .collect::<contagion_core::Result<_>>()?;
    let mut run = EpisodeRun {
        mean: TrajectoryMean::new(),
        losses: Vec::with_capacity(n),
        daily: Vec::new(),
        mean_shortfall: vec![0.0; grid.len()],
        tally: BTreeMap::new(),
    };
    for c in chunks {
        run.mean = run.mean.merge(c.mean);
        run.losses.extend(c.losses);
        run.daily.extend(c.daily);
        run.mean_shortfall.iter_mut().zip(&c.shortfall).for_each(|(a, b)| *a += b);
        for (k, t) in c.tally {
            let e = run.tally.entry(k).or_default();
            e.firms += t.firms;
            e.hit += t.hit;
            e.first_day += t.first_day;
            e.subunits += t.subunits;
        }
    }
    run.mean_shortfall.iter_mut().for_each(|x| *x /= n as f64);
    Ok(run)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub scenarios: usize,
    pub seed: u64,
    pub mean: f64,
    pub mode: f64,
    pub q05: f64,
    pub q95: f64,
    pub min: f64,
    pub max: f64,
}

impl LossSummary {
    fn new(dist: &LossDistribution, seed: u64) -> anyhow::Result<Self> {
        let DistributionSummary { mean, mode, lower, upper } = distribution_summary(dist)?;
        Ok(Self {
            scenarios: dist.len(),
            seed,
            mean,
            mode,
            q05: dist.quantile(0.05).unwrap_or(lower),
            q95: dist.quantile(0.95).unwrap_or(upper),
            min: lower,
            max: upper,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub theta: ThetaSpec,
    pub peak: Peak,
    pub final_prevalence: f64,
    pub losses: LossSummary,
}

#[derive(Serialize)]
struct CdfRow {
    x: f64,
    #[serde(rename = "F")]
    f: f64,
}

#[derive(Serialize)]
struct DailyLossRow {
    day: usize,
    scenario: usize,
    loss: f64,
}

#[derive(Serialize)]
struct OutputRow {
    day: f64,
    expected_output: f64,
}

#[derive(Serialize)]
struct InfectionSummaryRow {
    size: usize,
    firms: usize,
    p_infected: f64,
    mean_first_infection_day: Option<f64>,
    mean_subunits_infected: Option<f64>,
}

fn write_cdf(path: &Path, dist: &LossDistribution) -> anyhow::Result<()> {
    let xs = dist.samples();
    let n = xs.len() as f64;
    let rows = xs
        .iter()
        .enumerate()
        .filter(|(i, x)| xs.get(i + 1) != Some(x))
        .map(|(i, &x)| CdfRow { x, f: (i + 1) as f64 / n });
    io::write_rows(path, "x: episode loss over the horizon in MEUR; F: empirical CDF", rows)
}

pub fn cmd_simulate(cfg: &RunConfig) -> anyhow::Result<Status> {
    simulate_inner(cfg, true)
}

pub fn cmd_cdf(cfg: &RunConfig) -> anyhow::Result<Status> {
    simulate_inner(cfg, false)
}

fn simulate_inner(cfg: &RunConfig, full: bool) -> anyhow::Result<Status> {
    let (theta, zipf) = load_theta(cfg)?;
    let model = build_model(cfg, &theta, &zipf)?;
    let firms = load_portfolio(cfg, &zipf)?;
    let grid = model.grid;
    log::info!("simulating {} scenarios over {} firms", cfg.n_scenarios, firms.len());
    let run = run_episodes(&model, &firms, RngStream::master(cfg.seed), cfg.n_scenarios, full)?;
    let dist = LossDistribution::new(run.losses.clone())?;
    let losses = LossSummary::new(&dist, cfg.seed)?;
    let out = &cfg.paths.output_dir;
    write_cdf(&out.join("cdf.csv"), &dist)?;
    if !full {
        io::write_json(&out.join("loss_summary.json"), &losses)?;
        log::info!("mean loss {:.3} MEUR, 90% band [{:.3}, {:.3}]", losses.mean, losses.q05, losses.q95);
        return Ok(Status::Ok);
    }

    let mean = run.mean.finish().ok_or_else(|| anyhow!("no scenarios"))?;
    let pk = peak(&mean, &model.populations)?;
    io::write_rows(
        &out.join("trajectories.csv"),
        "mean SIR fractions per size relative to the firm count; Y per day",
        trajectory_rows(&mean, &grid),
    )?;
    let daily = run.daily.iter().enumerate().flat_map(|(m, d)| {
        d.iter().enumerate().map(move |(u, &loss)| DailyLossRow { day: u, scenario: m, loss })
    });
    io::write_rows(&out.join("losses_daily.csv"), "loss in MEUR accrued over [day, day + 1]", daily)?;
    let output = expected_output(&firms, &run.mean_shortfall, &grid)?;
    io::write_rows(
        &out.join("output.csv"),
        "expected portfolio revenue in MEUR per day",
        grid.points().zip(output).map(|(day, expected_output)| OutputRow { day, expected_output }),
    )?;
    let rows = run.tally.iter().map(|(&size, t)| InfectionSummaryRow {
        size,
        firms: (t.firms / cfg.n_scenarios as f64).round() as usize,
        p_infected: t.hit / t.firms,
        mean_first_infection_day: (t.hit > 0.0).then(|| t.first_day / t.hit),
        mean_subunits_infected: (t.hit > 0.0).then(|| t.subunits / t.hit),
    });
    io::write_rows(&out.join("infection_summary.csv"), "per portfolio firm size; days from episode start", rows)?;
    let summary = SimulationSummary {
        theta,
        peak: pk,
        final_prevalence: mean.states.last().map_or(0.0, |s| s.removed_subunits() / mean.n0),
        losses,
    };
    io::write_json(&out.join("summary.json"), &summary)?;
    log::info!(
        "peak {:.1} infected subunits on day {}; mean loss {:.3} MEUR",
        pk.value,
        pk.day,
        summary.losses.mean
    );
    Ok(Status::Ok)
}

#[derive(Serialize, Deserialize)]
pub struct AepRow {
    pub x: f64,
    #[serde(rename = "AEP_exact")]
    pub aep_exact: f64,
    #[serde(rename = "AEP_approx")]
    pub aep_approx: f64,
}

pub fn cmd_aep(cfg: &RunConfig) -> anyhow::Result<Status> {
    let (theta, zipf) = load_theta(cfg)?;
    let model = build_model(cfg, &theta, &zipf)?;
    let firms = load_portfolio(cfg, &zipf)?;
    let master = RngStream::master(cfg.seed);
    let aep_cfg = AepConfig::new(cfg.upsilon, cfg.n_outer, Vec::new())?;
    let exact = if cfg.bootstrap_aep {
        log::info!("building a pool of {} episode losses", cfg.n_scenarios);
        let run = run_episodes(&model, &firms, master.child(2), cfg.n_scenarios, false)?;
        aep_bootstrap(&LossDistribution::new(run.losses)?, &aep_cfg, master)?
    } else {
        aep_exact(&aep_cfg, master, |s| simulate_scenario(&model, &firms, s).map(|o| episode_loss(&o)))?
    };
    let approx = aep_approx(&model, &firms, &aep_cfg, master)?;
    let freq = poisson_frequencies(&exact.counts, 2);
    log::info!(
        "episode counts over {} replications: P(0) = {:.4}, P(1) = {:.4}, P(2) = {:.5}",
        cfg.n_outer,
        freq[0],
        freq[1],
        freq[2]
    );
    let thresholds = if cfg.thresholds.is_empty() {
        let top = exact.compound.max().unwrap_or(0.0).max(approx.compound.max().unwrap_or(0.0));
        let n = cfg.aep_points;
        (0..n).map(|i| top * i as f64 / (n - 1) as f64).collect()
    } else {
        cfg.thresholds.clone()
    };
    let rows = thresholds.iter().map(|&x| AepRow {
        x,
        aep_exact: exact.at(x),
        aep_approx: approx.at(x),
    });
    io::write_rows(
        &cfg.paths.output_dir.join("aep.csv"),
        "x: aggregate loss over the horizon in MEUR; exceedance probabilities",
        rows,
    )?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<ThetaFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulation: Option<SimulationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    losses: Option<LossSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    aep: Option<Vec<AepRow>>,
}

/// Gather the artifacts of earlier commands into one JSON document on stdout.
pub fn cmd_report(cfg: &RunConfig) -> anyhow::Result<Status> {
    let out = &cfg.paths.output_dir;
    let theta = cfg.paths.theta.exists().then(|| io::read_json(&cfg.paths.theta)).transpose()?;
    let sim_path = out.join("summary.json");
    let simulation = sim_path.exists().then(|| io::read_json(&sim_path)).transpose()?;
    let loss_path = out.join("loss_summary.json");
    let losses = loss_path.exists().then(|| io::read_json(&loss_path)).transpose()?;
    let aep_path = out.join("aep.csv");
    let aep = aep_path
        .exists()
        .then(|| io::read_rows::<AepRow>(&aep_path).map(|rows| rows.into_iter().map(|r| r.1).collect()))
        .transpose()?;
    let report = Report {
        theta,
        simulation,
        losses,
        aep,
    };
    if report.theta.is_none() && report.simulation.is_none() && report.losses.is_none() && report.aep.is_none() {
        bail!("nothing to report: no theta file and no outputs in {}", out.display());
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(Status::Ok)
}
