use anyhow::anyhow;
use contagion_core::calibration::{allocate_populations, InfectionPanel};
use contagion_core::firm::sample_firm_sizes;
use contagion_core::sir::{allocate_initial_infected, initial_state, simulate_sir_substeps, TrajectoryMean};
use contagion_core::stochproc::gbm_path;
use contagion_core::{Firm, RngStream, Subunit, TimeGrid};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::commands::Status;
use crate::config::RunConfig;
use crate::io::{self, RevenueRow, SectorRateRow};

const DAYS_PER_YEAR: f64 = 365.0;

/// Synthetic firms: true sizes from the size law, yearly revenue paths, and the daily
/// portfolio view of the same firms.
pub fn synth_firms(cfg: &RunConfig) -> anyhow::Result<(Vec<Firm>, Vec<RevenueRow>)> {
    let spec = &cfg.synth;
    let master = RngStream::master(cfg.seed).child(3);
    let sizes = sample_firm_sizes(&spec.zipf, spec.n_firms, &mut master.child(0).rng());
    let share_total: f64 = spec.sectors.iter().map(|s| s.1).sum();
    let years = TimeGrid::new(0.0, (spec.years - 1) as f64, 1.0)?;
    let uniform = |rng: &mut rand_chacha::ChaCha8Rng, (lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..hi) } else { lo };

    let mut firms = Vec::with_capacity(sizes.len());
    let mut rows = Vec::with_capacity(sizes.len() * spec.years);
    for (i, &k) in sizes.iter().enumerate() {
        let mut rng = master.child(1).child(i as u64).rng();
        let mut pick = rng.random::<f64>() * share_total;
        let sector = spec
            .sectors
            .iter()
            .find(|s| {
                pick -= s.1;
                pick < 0.0
            })
            .unwrap_or_else(|| spec.sectors.last().expect("validated"))
            .0
            .clone();
        let z_sub = uniform(&mut rng, spec.revenue_per_subunit);
        let drift = uniform(&mut rng, spec.drift_annual);
        let vol = uniform(&mut rng, spec.vol_annual);
        let shocks: Vec<f64> = (0..years.cells()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let path = gbm_path(z_sub * k as f64, drift, vol, &years, &shocks)?;
        let id = format!("F{i:06}");
        for (y, z) in path.iter().enumerate() {
            rows.push(RevenueRow {
                firm_id: id.clone(),
                sector: sector.clone(),
                year: spec.first_year + y as i32,
                revenue_meur: *z,
            });
        }
        let last = path.last().copied().unwrap_or(z_sub);
        let sub = Subunit {
            z0: last / k as f64 / DAYS_PER_YEAR,
            drift: drift / DAYS_PER_YEAR,
            vol: vol / DAYS_PER_YEAR.sqrt(),
        };
        firms.push(Firm::new(id, sector, vec![sub; k], 1.0)?);
    }
    Ok((firms, rows))
}

/// Rounded mean infected-firm counts under the synthetic coefficients.
pub fn synth_panel(cfg: &RunConfig) -> anyhow::Result<InfectionPanel> {
    let spec = &cfg.synth;
    let pops: Vec<f64> = allocate_populations(spec.theta.h_star, &spec.zipf)?
        .into_iter()
        .map(|h| h as f64)
        .collect();
    let h: f64 = pops.iter().sum();
    let infected: Vec<f64> = allocate_initial_infected(&pops, cfg.initial_infected_subunits)?
        .iter()
        .map(|x| x.round())
        .collect();
    let initial = initial_state(&pops, &infected)?;
    let grid = TimeGrid::daily(cfg.horizon_days)?;
    let env = spec.theta.environment(spec.zipf.max_size)?;
    let master = RngStream::master(cfg.seed).child(4);
    let mut mean = TrajectoryMean::new();
    for m in 0..spec.panel_scenarios {
        let p = env.simulate(&grid, master.stream(m as u64));
        mean.add(&simulate_sir_substeps(&initial, &p.sir_params(), &grid, cfg.substeps)?);
    }
    let traj = mean.finish().ok_or_else(|| anyhow!("no panel scenarios"))?;
    Ok(InfectionPanel::new(
        traj.states
            .iter()
            .map(|s| s.i.iter().map(|i| (h * i).round()).collect())
            .collect(),
    )?)
}

pub fn cmd_synth(cfg: &RunConfig) -> anyhow::Result<Status> {
    let (firms, rows) = synth_firms(cfg)?;
    io::write_rows(&cfg.paths.revenues, "annual revenue in MEUR", rows)?;
    io::write_portfolio(&cfg.paths.portfolio, &firms)?;
    let share_total: f64 = cfg.synth.sectors.iter().map(|s| s.1).sum();
    io::write_rows(
        &cfg.paths.sector_rates,
        "share of infected firms per sector",
        cfg.synth.sectors.iter().map(|(sector, share)| SectorRateRow {
            sector: sector.clone(),
            share: share / share_total,
        }),
    )?;
    let panel = synth_panel(cfg)?;
    io::write_infections(&cfg.paths.infections, &panel)?;
    log::info!(
        "wrote {} firms and a {}-day infection panel ({} infected firm-days)",
        firms.len(),
        panel.days(),
        panel.total()
    );
    Ok(Status::Ok)
}
