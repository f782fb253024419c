use serde::{Deserialize, Serialize};

use super::dynamics::SirTrajectory;
use super::kernel::splitting_matrix;
use super::state::{SirParamsAt, SirState};
use crate::error::{Error, Result};
use crate::stochproc::TimeGrid;

/// `R_max = max_k(β_k/γ_k) · Σ_i i Σ_{m>=i} (m S_m / N0) b_mi`.
pub fn r_max(state: &SirState, params: &SirParamsAt, n0: f64) -> Result<f64> {
    let n = state.max_size();
    Error::check_len("params", n, params.max_size())?;
    if !(n0 > 0.0) {
        return Err(Error::invalid("n0", format!("must be > 0, got {n0}")));
    }
    if params.gamma.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::invalid("gamma", "all recovery rates must be > 0"));
    }
    let ratio = params
        .beta
        .iter()
        .zip(&params.gamma)
        .map(|(b, g)| b / g)
        .fold(0.0, f64::max);
    let kernel = splitting_matrix(params.a, n)?;
    let mut sum = 0.0;
    for i in 1..=n {
        for m in i..=n {
            sum += i as f64 * m as f64 * state.s[m - 1] / n0 * kernel.get(m, i);
        }
    }
    Ok(ratio * sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Infected subunit count at the peak.
    pub value: f64,
    /// First grid index reaching it.
    pub day: usize,
}

/// Peak of the total infected subunit count `h · Σ k I_k`, where `h = Σ populations`
/// is the firm count the fractions are relative to.
pub fn peak(traj: &SirTrajectory, populations: &[f64]) -> Result<Peak> {
    if traj.is_empty() {
        return Err(Error::Empty("trajectory"));
    }
    let h: f64 = populations.iter().sum();
    let mut best = Peak {
        value: f64::NEG_INFINITY,
        day: 0,
    };
    for (u, st) in traj.states.iter().enumerate() {
        let v = h * st.infected_subunits();
        if v > best.value {
            best = Peak { value: v, day: u };
        }
    }
    Ok(best)
}

/// Fraction of removed subunits `(1/N0) Σ k R_k` per day.
pub fn prevalence(traj: &SirTrajectory, n0: f64) -> Vec<f64> {
    traj.states.iter().map(|s| s.removed_subunits() / n0).collect()
}

/// Running mean of trajectories sharing a grid and size range.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryMean {
    sum: Option<SirTrajectory>,
    count: usize,
}

impl TrajectoryMean {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn add(&mut self, traj: &SirTrajectory) {
        self.count += 1;
        let Some(acc) = self.sum.as_mut() else {
            self.sum = Some(traj.clone());
            return;
        };
        for (a, b) in acc.states.iter_mut().zip(&traj.states) {
            add_into(&mut a.s, &b.s);
            add_into(&mut a.i, &b.i);
            add_into(&mut a.r, &b.r);
        }
        add_into(&mut acc.force, &traj.force);
        for (a, b) in acc.params.iter_mut().zip(&traj.params) {
            add_into(&mut a.beta, &b.beta);
            add_into(&mut a.gamma, &b.gamma);
            a.a += b.a;
        }
    }

    pub fn merge(mut self, other: TrajectoryMean) -> TrajectoryMean {
        match (self.sum.as_mut(), other.sum) {
            (_, None) => self,
            (None, Some(s)) => TrajectoryMean {
                sum: Some(s),
                count: other.count,
            },
            (Some(_), Some(s)) => {
                // add() counts one trajectory; patch the count afterwards
                self.add(&s);
                self.count += other.count - 1;
                self
            }
        }
    }

    pub fn finish(self) -> Option<SirTrajectory> {
        let mut t = self.sum?;
        let c = self.count as f64;
        for st in &mut t.states {
            st.s.iter_mut().chain(st.i.iter_mut()).chain(st.r.iter_mut()).for_each(|x| *x /= c);
        }
        t.force.iter_mut().for_each(|x| *x /= c);
        for p in &mut t.params {
            p.beta.iter_mut().chain(p.gamma.iter_mut()).for_each(|x| *x /= c);
            p.a /= c;
        }
        Some(t)
    }
}

fn add_into(a: &mut [f64], b: &[f64]) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
}

/// One row of the plot-ready trajectory table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub day: f64,
    pub k: usize,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "Y")]
    pub y: f64,
}

pub fn trajectory_rows(traj: &SirTrajectory, grid: &TimeGrid) -> Vec<TrajectoryRow> {
    let mut rows = Vec::with_capacity(traj.len() * traj.states.first().map_or(0, SirState::max_size));
    for (u, (st, y)) in traj.states.iter().zip(&traj.force).enumerate() {
        for k in 0..st.max_size() {
            rows.push(TrajectoryRow {
                day: grid.point(u),
                k: k + 1,
                s: st.s[k],
                i: st.i[k],
                r: st.r[k],
                y: *y,
            });
        }
    }
    rows
}
