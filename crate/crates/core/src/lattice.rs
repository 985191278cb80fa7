use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};
use crate::grid::{as_integer, signed_index, GridSpec, TFShift};

/// Separable lattice `αZ × βZ` restricted to a periodic grid.
///
/// Stored as the time step `a = α·s` in samples and the frequency period
/// `b = 1/(βΔ)` in samples. Both must divide `n`, so the lattice has
/// `n/a` time nodes and `b` frequency nodes per period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TFLattice {
    grid: GridSpec,
    time_step: usize,
    freq_period: usize,
}

/// Plain `(α, β)` pair as found in config and coefficient files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    pub alpha: f64,
    pub beta: f64,
}

impl TFLattice {
    pub fn new(grid: GridSpec, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(GaborError::InvalidLattice(format!(
                "alpha = {alpha} and beta = {beta} must be positive"
            )));
        }
        let s = grid.samples_per_unit() as f64;
        let a = as_integer(alpha * s)
            .filter(|&a| a > 0)
            .ok_or_else(|| GaborError::InvalidLattice(format!("alpha = {alpha} is not a multiple of the grid step")))?;
        let b = as_integer(s / beta).filter(|&b| b > 0).ok_or_else(|| {
            GaborError::InvalidLattice(format!("1/beta = {} is not a multiple of the grid step", 1.0 / beta))
        })?;
        Self::from_samples(grid, a as usize, b as usize)
    }

    /// Builds the lattice from the time step and frequency period in samples.
    pub fn from_samples(grid: GridSpec, time_step: usize, freq_period: usize) -> Result<Self> {
        let n = grid.len();
        if time_step == 0 || !n.is_multiple_of(time_step) {
            return Err(GaborError::InvalidLattice(format!(
                "L/alpha is not an integer (time step {time_step} samples, n = {n})"
            )));
        }
        if freq_period == 0 || !n.is_multiple_of(freq_period) {
            return Err(GaborError::InvalidLattice(format!(
                "beta·L is not an integer (1/beta = {freq_period} samples, n = {n})"
            )));
        }
        Ok(Self {
            grid,
            time_step,
            freq_period,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.time_step as f64 * self.grid.step()
    }

    pub fn beta(&self) -> f64 {
        self.grid.samples_per_unit() as f64 / self.freq_period as f64
    }

    pub fn params(&self) -> LatticeParams {
        LatticeParams {
            alpha: self.alpha(),
            beta: self.beta(),
        }
    }

    /// Time step `α` in samples.
    pub fn time_step_samples(&self) -> usize {
        self.time_step
    }

    /// Frequency period `1/β` in samples; also the number of frequency nodes.
    pub fn freq_period_samples(&self) -> usize {
        self.freq_period
    }

    /// Number of time nodes `L/α`.
    pub fn time_nodes(&self) -> usize {
        self.grid.len() / self.time_step
    }

    /// Number of frequency nodes in the grid band.
    pub fn freq_nodes(&self) -> usize {
        self.freq_period
    }

    /// Number of distinct shifts `j/β` modulo the period.
    pub fn walnut_shifts(&self) -> usize {
        self.grid.len() / self.freq_period
    }

    /// Total lattice size `(L/α)·(βL·s/(βL))`.
    pub fn size(&self) -> usize {
        self.time_nodes() * self.freq_nodes()
    }

    /// `αβ`.
    pub fn density(&self) -> f64 {
        self.alpha() * self.beta()
    }

    /// Canonical signed time-node index.
    pub fn signed_time_node(&self, k: usize) -> i64 {
        signed_index(k, self.time_nodes())
    }

    /// Canonical signed frequency-node index.
    pub fn signed_freq_node(&self, q: usize) -> i64 {
        signed_index(q, self.freq_nodes())
    }

    /// Time position `kα` (canonical, in `(-L/2, L/2]`).
    pub fn time_position(&self, k: usize) -> f64 {
        self.grid.samples_to_shift(k * self.time_step)
    }

    /// Frequency `jβ` for node `q` (canonical, signed).
    pub fn frequency(&self, q: usize) -> f64 {
        self.signed_freq_node(q) as f64 * self.beta()
    }

    /// `λ = (kα, qβ)` as a time-frequency shift.
    pub fn point(&self, k: usize, q: usize) -> TFShift {
        // qβ = q·s/b = q·n/(b·L), i.e. frequency index q·(n/b)
        TFShift::from_indices(self.grid, k * self.time_step, q * self.walnut_shifts())
    }

    /// Whether `shift` is a lattice point (used by commutation checks).
    pub fn contains(&self, shift: &TFShift) -> bool {
        shift.grid() == &self.grid
            && shift.shift_samples().is_multiple_of(self.time_step)
            && shift.frequency_index().is_multiple_of(self.walnut_shifts())
    }
}
