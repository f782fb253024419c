//! Batch pipelines around `contagion-core`: calibration from CSV panels, episode
//! simulation, loss CDFs, aggregate exceedance curves and synthetic inputs.

pub mod commands;
pub mod config;
pub mod io;
pub mod synth;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use commands::Status;
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "contagion", version, about = "Contagious cyber-episode risk pipelines")]
pub struct Cli {
    /// JSON run configuration; missing fields take defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Episode scenarios M.
    #[arg(long, global = true)]
    pub scenarios: Option<usize>,
    /// Outer replications M_P of the aggregate loss.
    #[arg(long, global = true)]
    pub outer: Option<usize>,
    /// Mean number of episodes per horizon.
    #[arg(long, global = true)]
    pub upsilon: Option<f64>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Fit the contagion coefficients to the infection panel.
    Calibrate,
    /// Simulate episodes: trajectories, daily losses, loss CDF, expected output.
    Simulate,
    /// Episode loss CDF only.
    Cdf,
    /// Aggregate exceedance probabilities, resimulated and approximated.
    Aep,
    /// Write synthetic revenue, portfolio and infection files.
    Synth,
    /// Print a JSON summary of existing outputs.
    Report,
}

impl Cli {
    pub fn resolve_config(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = self.scenarios {
            cfg.n_scenarios = m;
        }
        if let Some(m) = self.outer {
            cfg.n_outer = m;
        }
        if let Some(u) = self.upsilon {
            cfg.upsilon = u;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(cli: &Cli) -> ExitCode {
    let result = cli.resolve_config().and_then(|cfg| {
        if cli.print_config {
            println!("{}", serde_json::to_string_pretty(&cfg)?);
            return Ok(Status::Ok);
        }
        match cli.command {
            Some(Command::Calibrate) => commands::cmd_calibrate(&cfg),
            Some(Command::Simulate) => commands::cmd_simulate(&cfg),
            Some(Command::Cdf) => commands::cmd_cdf(&cfg),
            Some(Command::Aep) => commands::cmd_aep(&cfg),
            Some(Command::Synth) => synth::cmd_synth(&cfg),
            Some(Command::Report) => commands::cmd_report(&cfg),
            None => anyhow::bail!("no subcommand given (see --help)"),
        }
    });
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Warning) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
