//! Sticky random walk: a nearest-neighbour Markov jump process on the grid
//! `{0, h, 2h, …}` whose generator discretizes `∂ₓₓ` with the sticky
//! boundary condition `κ f''(0) = f'(0)`.
//!
//! Interior states jump to either neighbour at rate `1/h²`. The origin
//! jumps to state 1 at rate `2/(h² + 2κh)`, so the mean holding time is
//! `h²/2` in the interior and `κh + h²/2` at the origin.

mod amir;
mod simulate;
mod trajectory;

pub use amir::{amir_occupation_fraction, amir_walk, AMIR_MAX_LEVEL};
pub use simulate::{rescale_kappa, simulate, simulate_segment, Walker, DEFAULT_STATE_CAP};
pub use trajectory::JumpTrajectory;

use serde::{Deserialize, Serialize};

use crate::error::{non_negative, positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    h: f64,
}

impl Grid {
    pub fn new(h: f64) -> Result<Self> {
        Ok(Grid { h: positive("h", h)? })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn position(&self, k: u32) -> f64 {
        k as f64 * self.h
    }

    /// Grid index of `x`, which must be a grid point up to rounding.
    pub fn index_of(&self, x: f64) -> Result<u32> {
        let k = (x / self.h).round();
        if x < 0.0 || (k * self.h - x).abs() > 1e-9 * self.h.max(x.abs()) || k > u32::MAX as f64 {
            return Err(Error::param(
                "x",
                format!("{x} is not a grid point of spacing {}", self.h),
            ));
        }
        Ok(k as u32)
    }
}

/// `Root2` discretizes `∂ₓₓ`; `Standard` discretizes `½∂ₓₓ` (all rates halved).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateScale {
    #[default]
    Root2,
    Standard,
}

impl RateScale {
    fn factor(self) -> f64 {
        match self {
            RateScale::Root2 => 1.0,
            RateScale::Standard => 0.5,
        }
    }
}

/// One row of a generator: total exit rate and the probability of jumping up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorRow {
    pub exit_rate: f64,
    pub p_up: f64,
}

impl GeneratorRow {
    /// Jump distribution as `(target state, probability)` pairs.
    pub fn neighbor_probs(&self, k: u32) -> Vec<(u32, f64)> {
        let mut out = Vec::with_capacity(2);
        if self.p_up < 1.0 {
            out.push((k - 1, 1.0 - self.p_up));
        }
        if self.p_up > 0.0 {
            out.push((k + 1, self.p_up));
        }
        out
    }

    pub fn mean_holding_time(&self) -> f64 {
        1.0 / self.exit_rate
    }
}

/// Nearest-neighbour jump generator on a (possibly bounded) grid.
pub trait JumpGenerator: Sync {
    fn grid(&self) -> Grid;

    /// Largest admissible state, `None` for the half-line.
    fn max_state(&self) -> Option<u32>;

    fn row(&self, k: u32) -> Result<GeneratorRow>;

    fn mean_holding_time(&self, k: u32) -> Result<f64> {
        self.row(k).map(|r| r.mean_holding_time())
    }

    /// Non-zero matrix entries `(j, Q_kj)` of row `k`, diagonal included.
    fn entries(&self, k: u32) -> Result<Vec<(u32, f64)>> {
        let row = self.row(k)?;
        let mut out: Vec<(u32, f64)> = row
            .neighbor_probs(k)
            .into_iter()
            .map(|(j, p)| (j, p * row.exit_rate))
            .collect();
        out.push((k, -row.exit_rate));
        out.sort_by_key(|e| e.0);
        Ok(out)
    }

    fn check_state(&self, k: u32) -> Result<()> {
        match self.max_state() {
            Some(n) if k > n => Err(Error::StateOutOfRange {
                state: k as u64,
                range: format!("0..={n}"),
            }),
            _ => Ok(()),
        }
    }
}

/// Half-line sticky random walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrwGenerator {
    grid: Grid,
    kappa: f64,
    scale: RateScale,
}

impl SrwGenerator {
    pub fn new(h: f64, kappa: f64) -> Result<Self> {
        Self::with_scale(h, kappa, RateScale::Root2)
    }

    pub fn with_scale(h: f64, kappa: f64, scale: RateScale) -> Result<Self> {
        Ok(SrwGenerator {
            grid: Grid::new(h)?,
            kappa: non_negative("kappa", kappa)?,
            scale,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn scale(&self) -> RateScale {
        self.scale
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::with_scale(self.grid.h, kappa, self.scale)
    }
}

fn boundary_rate(h: f64, kappa: f64) -> f64 {
    2.0 / (h * h + 2.0 * kappa * h)
}

impl JumpGenerator for SrwGenerator {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn max_state(&self) -> Option<u32> {
        None
    }

    fn row(&self, k: u32) -> Result<GeneratorRow> {
        let h = self.grid.h;
        let s = self.scale.factor();
        Ok(if k == 0 {
            GeneratorRow { exit_rate: s * boundary_rate(h, self.kappa), p_up: 1.0 }
        } else {
            GeneratorRow { exit_rate: s * 2.0 / (h * h), p_up: 0.5 }
        })
    }
}

/// Sticky random walk on `[0, L]` with sticky parameters at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentGenerator {
    grid: Grid,
    kappa_left: f64,
    kappa_right: f64,
    cells: u32,
}

impl SegmentGenerator {
    /// `length / h` must be an integer ≥ 1.
    pub fn new(h: f64, kappa_left: f64, kappa_right: f64, length: f64) -> Result<Self> {
        let grid = Grid::new(h)?;
        positive("length", length)?;
        let cells = grid.index_of(length)?;
        if cells == 0 {
            return Err(Error::param("length", "segment must contain at least one cell"));
        }
        Ok(SegmentGenerator {
            grid,
            kappa_left: non_negative("kappa_left", kappa_left)?,
            kappa_right: non_negative("kappa_right", kappa_right)?,
            cells,
        })
    }

    /// Index of the right endpoint, `L/h`.
    pub fn cells(&self) -> u32 {
        self.cells
    }

    pub fn length(&self) -> f64 {
        self.grid.position(self.cells)
    }

    pub fn kappa_left(&self) -> f64 {
        self.kappa_left
    }

    pub fn kappa_right(&self) -> f64 {
        self.kappa_right
    }
}

impl JumpGenerator for SegmentGenerator {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn max_state(&self) -> Option<u32> {
        Some(self.cells)
    }

    fn row(&self, k: u32) -> Result<GeneratorRow> {
        self.check_state(k)?;
        let h = self.grid.h;
        Ok(if k == 0 {
            GeneratorRow { exit_rate: boundary_rate(h, self.kappa_left), p_up: 1.0 }
        } else if k == self.cells {
            GeneratorRow { exit_rate: boundary_rate(h, self.kappa_right), p_up: 0.0 }
        } else {
            GeneratorRow { exit_rate: 2.0 / (h * h), p_up: 0.5 }
        })
    }
}
