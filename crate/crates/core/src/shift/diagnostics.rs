//! Coefficient-decay and continuity diagnostics for shift operators.

use num_complex::Complex64;
use serde::Serialize;

use super::{sup, ShiftOperator};
use crate::error::{GaborError, Result};
use crate::weight::WeightSpec;

/// A refinement ratio above this counts as "not shrinking".
pub const CONTINUITY_RATIO_THRESHOLD: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    pub radius: f64,
    /// `T(K) = Σ_{|x| > K} ‖m_x‖_∞ w(x)`.
    pub tail: f64,
    /// `T(K) / ‖M‖_{A_w}`.
    pub ratio: f64,
}

/// Weighted tail sums of the multipliers outside each radius.
pub fn coefficient_decay_profile(op: &ShiftOperator, w: &WeightSpec, radii: &[f64]) -> Result<Vec<DecayRow>> {
    let total = op.aw_norm(w)?;
    let parts = op
        .terms()
        .map(|(x, m)| {
            let shift = op.real_shift(x);
            Ok((shift.abs(), sup(m) * w.eval(shift)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    Ok(radii
        .iter()
        .map(|&radius| {
            let tail = parts
                .iter()
                .filter(|(d, _)| *d > radius)
                .fold(0.0, |acc, (_, v)| acc + v);
            DecayRow {
                radius,
                tail,
                ratio: if total > 0.0 { tail / total } else { 0.0 },
            }
        })
        .collect())
}

/// Discrete periodic modulus of continuity `max_l |f[l+1] − f[l]|`.
pub fn modulus_of_continuity(values: &[Complex64]) -> f64 {
    let n = values.len();
    (0..n)
        .map(|l| (values[(l + 1) % n] - values[l]).norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityRow {
    /// Canonical real shift of the multiplier.
    pub shift: f64,
    /// `ω(h)` at each refinement level, coarsest first.
    pub moduli: Vec<f64>,
    /// `ω(h/2) / ω(h)` between consecutive levels; 0 when `ω(h)` is 0.
    pub ratios: Vec<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub step_sizes: Vec<f64>,
    pub rows: Vec<ContinuityRow>,
}

impl ContinuityReport {
    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }
}

/// Compares multipliers of the same operator sampled on successively refined grids.
///
/// Multipliers are matched by real shift; a multiplier missing at some level counts as
/// zero there. A row is flagged when any ratio exceeds [`CONTINUITY_RATIO_THRESHOLD`].
pub fn continuity_flag(levels: &[ShiftOperator]) -> Result<ContinuityReport> {
    if levels.is_empty() {
        return Err(GaborError::InvalidGrid("no refinement levels".into()));
    }
    for pair in levels.windows(2) {
        if pair[0].grid().period() != pair[1].grid().period() {
            return Err(GaborError::GridMismatch);
        }
    }
    let mut shifts: Vec<f64> = levels
        .iter()
        .flat_map(|op| op.terms().map(move |(x, _)| op.real_shift(x)))
        .collect();
    shifts.sort_by(|a, b| a.total_cmp(b));
    shifts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let rows = shifts
        .into_iter()
        .map(|shift| {
            let moduli = levels
                .iter()
                .map(|op| {
                    Ok(op
                        .multiplier_at(shift)?
                        .map(|m| modulus_of_continuity(m.values()))
                        .unwrap_or(0.0))
                })
                .collect::<Result<Vec<f64>>>()?;
            let ratios: Vec<f64> = moduli
                .windows(2)
                .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
                .collect();
            let flagged = ratios.iter().any(|&r| r > CONTINUITY_RATIO_THRESHOLD);
            Ok(ContinuityRow {
                shift,
                moduli,
                ratios,
                flagged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContinuityReport {
        step_sizes: levels.iter().map(|op| op.grid().step()).collect(),
        rows,
    })
}
