use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::TimeGrid;
use crate::error::{Error, Result};

/// Cumulative hazard `Λ_t = ∫ Y` of an intensity held constant on each grid cell at its
/// left-endpoint value.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeHazard {
    grid: TimeGrid,
    rates: Vec<f64>,
    cumulative: Vec<f64>,
}

impl CumulativeHazard {
    /// `intensity[u]` is the rate on `[t_u, t_{u+1})`; either one value per grid point
    /// (the last is ignored) or one per cell.
    pub fn new(intensity: &[f64], grid: &TimeGrid) -> Result<Self> {
        let cells = grid.cells();
        if intensity.len() != grid.len() && intensity.len() != cells {
            return Err(Error::LengthMismatch {
                what: "intensity",
                expected: grid.len(),
                got: intensity.len(),
            });
        }
        if let Some(bad) = intensity.iter().find(|y| !(y.is_finite() && **y >= 0.0)) {
            return Err(Error::invalid("intensity", format!("must be finite and >= 0, got {bad}")));
        }
        let rates = intensity[..cells].to_vec();
        let mut cumulative = Vec::with_capacity(cells + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for y in &rates {
            acc += y * grid.step();
            cumulative.push(acc);
        }
        Ok(Self {
            grid: *grid,
            rates,
            cumulative,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Rate on cell `u`.
    pub fn rate(&self, cell: usize) -> f64 {
        self.rates[cell]
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// `Λ` at grid point `u`.
    pub fn at_point(&self, u: usize) -> f64 {
        self.cumulative[u]
    }

    /// `Λ_t` for any `t`, clamped to the grid.
    pub fn eval(&self, t: f64) -> f64 {
        let g = &self.grid;
        if t <= g.t0() {
            return 0.0;
        }
        if t >= g.end() {
            return self.total();
        }
        let c = g.cell_of(t);
        self.cumulative[c] + self.rates[c] * (t - g.point(c))
    }

    pub fn total(&self) -> f64 {
        self.cumulative[self.grid.cells()]
    }

    /// Time at which `Λ` reaches `level`, or `None` past the horizon.
    pub fn invert(&self, level: f64) -> Option<f64> {
        if level > self.total() || self.total() == 0.0 {
            return None;
        }
        if level <= 0.0 {
            let cell = self.rates.iter().position(|&y| y > 0.0)?;
            return Some(self.grid.point(cell));
        }
        // first point whose cumulative hazard reaches the level
        let cell = self.cumulative.partition_point(|&c| c < level) - 1;
        let rate = self.rates[cell];
        let t = self.grid.point(cell) + (level - self.cumulative[cell]) / rate;
        Some(t.min(self.grid.end()))
    }
}

/// First jump of a Cox process with the given piecewise-constant intensity, by inverting
/// the cumulative hazard at an `Exp(1)` level.
pub fn cox_first_jump<R: Rng + ?Sized>(hazard: &CumulativeHazard, rng: &mut R) -> Option<f64> {
    let level: f64 = Exp1.sample(rng);
    hazard.invert(level)
}
