use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nelder_mead::{nelder_mead_with, NelderMeadOptions, NelderMeadResult};
use super::objective::{objective_j2, objective_mean_path, ObjectiveConfig};
use super::panel::InfectionPanel;
use super::theta::ThetaSpec;
use crate::error::{Error, Result};
use crate::firm::ZipfSpec;
use crate::stochproc::{logistic, logit, RngStream};

pub const PARAMETER_NAMES: [&str; 6] = ["kappa_a", "sigma_a", "a0", "gamma1_0", "beta1_0", "h_star"];

/// Box for the search. The volatility is searched as a fraction of its Feller bound
/// `2κ min(ã0, γ1, β1)`, capped at `1 - feller_margin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBounds {
    pub kappa_a: (f64, f64),
    pub a0: (f64, f64),
    pub gamma1_0: (f64, f64),
    pub beta1_0: (f64, f64),
    pub h_star: (f64, f64),
    pub feller_margin: f64,
}

impl Default for CalibrationBounds {
    fn default() -> Self {
        Self {
            kappa_a: (0.01, 5.0),
            a0: (0.01, 5.0),
            gamma1_0: (0.01, 5.0),
            beta1_0: (0.01, 5.0),
            h_star: (1_000.0, 200_000.0),
            feller_margin: 1e-3,
        }
    }
}

impl CalibrationBounds {
    fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("kappa_a", self.kappa_a),
            ("a0", self.a0),
            ("gamma1_0", self.gamma1_0),
            ("beta1_0", self.beta1_0),
            ("h_star", self.h_star),
        ] {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(Error::invalid(name, format!("bad bounds ({lo}, {hi})")));
            }
        }
        if !(self.feller_margin > 0.0 && self.feller_margin < 1.0) {
            return Err(Error::invalid("feller_margin", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn to_theta(&self, x: &[f64]) -> ThetaSpec {
        let log_box = |v: f64, (lo, hi): (f64, f64)| lo * (hi / lo).powf(logistic(v));
        let kappa_a = log_box(x[0], self.kappa_a);
        let a0 = log_box(x[2], self.a0);
        let gamma1_0 = log_box(x[3], self.gamma1_0);
        let beta1_0 = log_box(x[4], self.beta1_0);
        let frac = logistic(x[1]) * (1.0 - self.feller_margin);
        ThetaSpec {
            kappa_a,
            sigma_a: (frac * 2.0 * kappa_a * a0.min(gamma1_0).min(beta1_0)).sqrt(),
            a0,
            gamma1_0,
            beta1_0,
            h_star: log_box(x[5], self.h_star),
        }
    }

    fn to_free(&self, t: &ThetaSpec) -> Vec<f64> {
        let inv = |v: f64, (lo, hi): (f64, f64)| {
            let u = ((v / lo).ln() / (hi / lo).ln()).clamp(1e-6, 1.0 - 1e-6);
            logit(u)
        };
        let bound = 2.0 * t.kappa_a * t.a0.min(t.gamma1_0).min(t.beta1_0);
        let frac = (t.sigma_a * t.sigma_a / bound / (1.0 - self.feller_margin)).clamp(1e-6, 1.0 - 1e-6);
        vec![
            inv(t.kappa_a, self.kappa_a),
            logit(frac),
            inv(t.a0, self.a0),
            inv(t.gamma1_0, self.gamma1_0),
            inv(t.beta1_0, self.beta1_0),
            inv(t.h_star, self.h_star),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub objective: ObjectiveConfig,
    pub starts: usize,
    /// Random points scored before the search (by the mean-path objective when
    /// `prefit_starts > 0`, otherwise by the Monte Carlo objective).
    pub screen: usize,
    /// Number of screened points first fitted against the zero-volatility mean path
    /// (one SIR solve per evaluation) before the Monte Carlo search; 0 skips that
    /// stage and seeds Nelder-Mead from the screen directly.
    pub prefit_starts: usize,
    pub nelder_mead: NelderMeadOptions,
    pub bounds: CalibrationBounds,
    /// Seeds the random starting points.
    pub seed: u64,
    /// Used as the first start when given.
    pub initial: Option<ThetaSpec>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            objective: ObjectiveConfig::default(),
            starts: 8,
            screen: 4096,
            prefit_starts: 32,
            nelder_mead: NelderMeadOptions::default(),
            bounds: CalibrationBounds::default(),
            seed: 0,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartResult {
    pub start: ThetaSpec,
    pub theta: ThetaSpec,
    pub j2: f64,
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub theta: ThetaSpec,
    pub j2: f64,
    pub converged: bool,
    /// Spread (standard deviation) of each coefficient over starts that ended within
    /// 5% of the best objective value.
    pub dispersion: [f64; 6],
    /// Coefficients whose 10% perturbation leaves the objective unchanged.
    pub flat_directions: Vec<String>,
    pub identifiable: bool,
    pub starts: Vec<StartResult>,
    /// Best objective value per iteration of the winning start.
    pub trace: Vec<f64>,
}

/// Multi-start Nelder-Mead fit of the contagion coefficients to an infection panel.
pub fn calibrate(panel: &InfectionPanel, zipf: &ZipfSpec, cfg: &CalibrationConfig) -> Result<CalibrationResult> {
    cfg.bounds.validate()?;
    if cfg.starts == 0 {
        return Err(Error::invalid("starts", "must be >= 1"));
    }
    Error::check_len("size-law support", panel.max_size(), zipf.max_size)?;
    let bounds = cfg.bounds;
    let f = |x: &[f64]| objective_j2(&bounds.to_theta(x), panel, zipf, &cfg.objective).unwrap_or(f64::INFINITY);

    let mut rng = RngStream::master(cfg.seed).child(0).rng();
    let mut pool: Vec<Vec<f64>> = cfg.initial.iter().map(|t| bounds.to_free(t)).collect();
    pool.extend((0..cfg.screen.max(cfg.starts)).map(|_| (0..6).map(|_| logit(rng.random_range(0.05..0.95))).collect()));
    let starts = if cfg.prefit_starts > 0 {
        prefit(&pool, panel, zipf, cfg)
    } else {
        let scores: Vec<f64> = pool.par_iter().map(|x| f(x)).collect();
        best_first(pool, &scores, cfg.initial.is_some(), cfg.starts)
    };

    let runs: Vec<(StartResult, Vec<f64>)> = starts
        .par_iter()
        .map(|x0| {
            let r = if cfg.prefit_starts > 0 {
                polish(f, x0, &cfg.nelder_mead)
            } else {
                nelder_mead_with(f, x0, &cfg.nelder_mead, logistic)
            };
            let res = StartResult {
                start: bounds.to_theta(x0),
                theta: bounds.to_theta(&r.x),
                j2: r.f,
                converged: r.converged,
                evaluations: r.evaluations,
            };
            log::debug!("start finished: J2 = {:e}, {} evaluations", r.f, r.evaluations);
            (res, r.trace)
        })
        .collect();

    let best = (0..runs.len())
        .min_by(|&a, &b| runs[a].0.j2.total_cmp(&runs[b].0.j2))
        .expect("at least one start");
    let (winner, trace) = runs[best].clone();
    if !winner.j2.is_finite() {
        return Err(Error::DegenerateFit("objective is infinite at every start".into()));
    }

    let good: Vec<[f64; 6]> = runs
        .iter()
        .filter(|(r, _)| r.j2 <= winner.j2 * 1.05 + 1e-12)
        .map(|(r, _)| r.theta.to_vec())
        .collect();
    let mut dispersion = [0.0; 6];
    for (j, d) in dispersion.iter_mut().enumerate() {
        let n = good.len() as f64;
        let mean = good.iter().map(|t| t[j]).sum::<f64>() / n;
        *d = (good.iter().map(|t| (t[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
    }

    let flat_directions: Vec<String> = (0..6)
        .filter(|&j| {
            let probe = |factor: f64| {
                let mut t = winner.theta.to_vec();
                t[j] *= factor;
                let t = ThetaSpec {
                    kappa_a: t[0],
                    sigma_a: t[1],
                    a0: t[2],
                    gamma1_0: t[3],
                    beta1_0: t[4],
                    h_star: t[5],
                };
                objective_j2(&t, panel, zipf, &cfg.objective).unwrap_or(f64::INFINITY)
            };
            let tol = 1e-9 * (1.0 + winner.j2.abs());
            (probe(1.1) - winner.j2).abs() <= tol && (probe(0.9) - winner.j2).abs() <= tol
        })
        .map(|j| PARAMETER_NAMES[j].to_string())
        .collect();

    Ok(CalibrationResult {
        theta: winner.theta,
        j2: winner.j2,
        converged: winner.converged,
        dispersion,
        identifiable: flat_directions.is_empty() && panel.total() > 0.0,
        flat_directions,
        starts: runs.into_iter().map(|r| r.0).collect(),
        trace,
    })
}

/// Search from a pre-fitted point: `(κ, Σ)` alone with the mean coefficients held,
/// then all six from a small simplex so the search stays in the pre-fitted basin.
fn polish<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    let tail = x0[2..].to_vec();
    let vol = |y: &[f64]| f(&[y, &tail[..]].concat());
    let budget = |used: usize| NelderMeadOptions {
        max_evals: opts.max_evals.saturating_sub(used).max(1),
        ..*opts
    };
    let a = nelder_mead_with(vol, &x0[..2], &budget(0), logistic);
    let joint = [&a.x[..], &tail[..]].concat();
    let step = NelderMeadOptions {
        initial_step: 0.2 * opts.initial_step,
        ..budget(a.evaluations)
    };
    let mut b = nelder_mead_with(&f, &joint, &step, logistic);
    if a.f < b.f {
        b.x = joint;
        b.f = a.f;
    }
    b.evaluations += a.evaluations;
    b.iterations += a.iterations;
    b.trace = a.trace.into_iter().chain(b.trace).collect();
    b
}

/// `pool` ordered by `scores`, keeping a leading initial guess in front.
fn best_first(mut pool: Vec<Vec<f64>>, scores: &[f64], keep_first: bool, n: usize) -> Vec<Vec<f64>> {
    let skip = usize::from(keep_first).min(pool.len());
    let mut order: Vec<usize> = (skip..pool.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut out: Vec<Vec<f64>> = pool.drain(..skip).collect();
    out.extend(order.into_iter().map(|i| pool[i - skip].clone()));
    out.truncate(n);
    out
}

/// Fits `(ã0, γ1, β1, h⋆)` of the best screened points against the mean-path objective,
/// holding each point's `κ` and volatility fraction, and returns the distinct optima
/// ranked by the Monte Carlo objective.
fn prefit(pool: &[Vec<f64>], panel: &InfectionPanel, zipf: &ZipfSpec, cfg: &CalibrationConfig) -> Vec<Vec<f64>> {
    let bounds = cfg.bounds;
    let g = |x: &[f64]| objective_mean_path(&bounds.to_theta(x), panel, zipf, &cfg.objective).unwrap_or(f64::INFINITY);
    let scores: Vec<f64> = pool.par_iter().map(|x| g(x)).collect();
    let seeds = best_first(pool.to_vec(), &scores, cfg.initial.is_some(), cfg.prefit_starts);
    let fitted: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|x0| {
            let head = [x0[0], x0[1]];
            let sub = |y: &[f64]| g(&[head[0], head[1], y[0], y[1], y[2], y[3]]);
            let r = nelder_mead_with(sub, &x0[2..], &cfg.nelder_mead, logistic);
            log::debug!("mean-path prefit: J = {:e}, {} evaluations", r.f, r.evaluations);
            [&head[..], &r.x[..]].concat()
        })
        .collect();
    let mut distinct: Vec<Vec<f64>> = Vec::new();
    for x in fitted {
        if !distinct.iter().any(|d| d[2..].iter().zip(&x[2..]).all(|(a, b)| (a - b).abs() < 0.05)) {
            distinct.push(x);
        }
    }
    let f = |x: &[f64]| objective_j2(&bounds.to_theta(x), panel, zipf, &cfg.objective).unwrap_or(f64::INFINITY);
    let scores: Vec<f64> = distinct.iter().map(|x| f(x)).collect();
    best_first(distinct, &scores, false, cfg.starts)
}
