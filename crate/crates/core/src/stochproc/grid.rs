use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform observation grid `t0, t0 + step, ..., t0 + horizon` (days).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    horizon: f64,
    step: f64,
    cells: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, horizon: f64, step: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::DegenerateGrid(format!("horizon must be > 0, got {horizon}")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::DegenerateGrid(format!("step must be > 0, got {step}")));
        }
        if !t0.is_finite() {
            return Err(Error::DegenerateGrid("t0 must be finite".into()));
        }
        let ratio = horizon / step;
        let cells = ratio.round();
        if (ratio - cells).abs() > 1e-9 * ratio.max(1.0) || cells < 1.0 {
            return Err(Error::DegenerateGrid(format!(
                "horizon {horizon} is not a whole number of steps of {step}"
            )));
        }
        Ok(Self {
            t0,
            horizon,
            step,
            cells: cells as usize,
        })
    }

    /// Daily grid on `[0, horizon]`.
    pub fn daily(horizon_days: usize) -> Result<Self> {
        Self::new(0.0, horizon_days as f64, 1.0)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.horizon
    }

    /// Number of grid points (`cells + 1`).
    pub fn len(&self) -> usize {
        self.cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn point(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |u| self.point(u))
    }

    /// Index of the cell `[t_u, t_{u+1})` containing `t`, clamped to the grid.
    pub fn cell_of(&self, t: f64) -> usize {
        let u = ((t - self.t0) / self.step).floor();
        if u <= 0.0 {
            0
        } else {
            (u as usize).min(self.cells - 1)
        }
    }

    /// Same grid with every cell split into `factor` sub-steps.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("factor", "must be >= 1"));
        }
        Self::new(self.t0, self.horizon, self.step / factor as f64)
    }

    /// Sentinel used for "no infection within the horizon".
    pub fn never(&self) -> f64 {
        self.end() + 1.0
    }
}
