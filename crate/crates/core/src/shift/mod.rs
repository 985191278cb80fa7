//! The algebra `A_w` of `L^∞`-weighted shifts `M = Σ_x m_x T_x` on a periodic grid.
//!
//! Shifts are stored in samples, reduced modulo `n`, so on a fixed grid the algebra
//! is finite-dimensional. Composition and involution follow the operator identities
//! `(Σ m_x T_x)(Σ n_x T_x) = Σ_x (Σ_y m_y n_{x−y}(·−y)) T_x` and
//! `(Σ m_x T_x)* = Σ_x conj(m_{−x}(·−x)) T_x`.

mod dense;
mod diagnostics;
mod neumann;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{GaborError, Result};
use crate::grid::{pairwise_sum, GridSpec, SampledFunction};
use crate::weight::WeightSpec;

pub use dense::{
    hermitian_extremes, operator_norm_bounds, quadratic_form_bounds, to_dense, DENSE_BLOCK_LIMIT, MAX_DENSE_SAMPLES,
};
pub use diagnostics::{
    coefficient_decay_profile, continuity_flag, modulus_of_continuity, ContinuityReport, ContinuityRow, DecayRow,
    CONTINUITY_RATIO_THRESHOLD,
};
pub use neumann::{neumann_inverse, NeumannInverse, NeumannOptions, NeumannReport};

/// A finite family `{(x, m_x)}` acting as `f ↦ Σ m_x · T_x f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOperator {
    grid: GridSpec,
    terms: BTreeMap<usize, Vec<Complex64>>,
}

fn is_zero(values: &[Complex64]) -> bool {
    values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
}

/// `acc[l] += m[l] · v[(l − shift) mod n]`.
#[inline]
fn accumulate_shifted(acc: &mut [Complex64], m: &[Complex64], v: &[Complex64], shift: usize) {
    let n = acc.len();
    let shift = shift % n;
    // l < shift reads v[l + n − shift], the rest v[l − shift]
    let (head, tail) = acc.split_at_mut(shift);
    for ((a, mm), vv) in head.iter_mut().zip(&m[..shift]).zip(&v[n - shift..]) {
        *a += mm * vv;
    }
    for ((a, mm), vv) in tail.iter_mut().zip(&m[shift..]).zip(&v[..n - shift]) {
        *a += mm * vv;
    }
}

fn sup(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

impl ShiftOperator {
    pub fn zero(grid: GridSpec) -> Self {
        Self {
            grid,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(grid: GridSpec) -> Self {
        Self::multiplication(SampledFunction::constant(grid, Complex64::new(1.0, 0.0)))
    }

    /// The multiplication operator `f ↦ m f`.
    pub fn multiplication(m: SampledFunction) -> Self {
        Self::single_samples(0, m)
    }

    /// `m · T_x` for a real shift `x`.
    pub fn single(x: f64, m: SampledFunction) -> Result<Self> {
        let k = m.grid().shift_to_samples(x)?;
        Ok(Self::single_samples(k, m))
    }

    /// `m · T_k` for a shift of `k` samples.
    pub fn single_samples(shift: usize, m: SampledFunction) -> Self {
        let grid = *m.grid();
        let mut terms = BTreeMap::new();
        let values = m.into_values();
        if !is_zero(&values) {
            terms.insert(shift % grid.len(), values);
        }
        Self { grid, terms }
    }

    /// Builds an operator from `(real shift, multiplier)` pairs; duplicates are summed.
    pub fn from_terms(grid: GridSpec, terms: impl IntoIterator<Item = (f64, SampledFunction)>) -> Result<Self> {
        let mut out = Self::zero(grid);
        for (x, m) in terms {
            if m.grid() != &grid {
                return Err(GaborError::GridMismatch);
            }
            let k = grid.shift_to_samples(x)?;
            out.add_term(k, m.values());
        }
        out.drop_zeros();
        Ok(out)
    }

    /// Builds an operator from sample offsets and raw multiplier values.
    pub fn from_sample_terms(grid: GridSpec, terms: impl IntoIterator<Item = (usize, Vec<Complex64>)>) -> Result<Self> {
        let mut out = Self::zero(grid);
        for (k, values) in terms {
            let m = SampledFunction::new(grid, values)?;
            out.add_term(k % grid.len(), m.values());
        }
        out.drop_zeros();
        Ok(out)
    }

    fn add_term(&mut self, shift: usize, values: &[Complex64]) {
        let entry = self
            .terms
            .entry(shift)
            .or_insert_with(|| vec![Complex64::default(); values.len()]);
        for (e, v) in entry.iter_mut().zip(values) {
            *e += v;
        }
    }

    fn drop_zeros(&mut self) {
        self.terms.retain(|_, m| !is_zero(m));
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending order of sample shift.
    pub fn terms(&self) -> impl Iterator<Item = (usize, &[Complex64])> + '_ {
        self.terms.iter().map(|(k, m)| (*k, m.as_slice()))
    }

    /// Multiplier at a sample shift, if present.
    pub fn multiplier(&self, shift: usize) -> Option<&[Complex64]> {
        self.terms.get(&(shift % self.grid.len())).map(Vec::as_slice)
    }

    /// Multiplier at a real shift, if present.
    pub fn multiplier_at(&self, x: f64) -> Result<Option<SampledFunction>> {
        let k = self.grid.shift_to_samples(x)?;
        Ok(self
            .terms
            .get(&k)
            .map(|m| SampledFunction::from_raw(self.grid, m.clone())))
    }

    /// Canonical real shift of a stored sample offset.
    pub fn real_shift(&self, shift: usize) -> f64 {
        self.grid.samples_to_shift(shift)
    }

    fn ensure_grid(&self, grid: &GridSpec) -> Result<()> {
        if &self.grid == grid {
            Ok(())
        } else {
            Err(GaborError::GridMismatch)
        }
    }

    /// `Σ_x m_x · T_x f`, summed in ascending shift order.
    pub fn apply(&self, f: &SampledFunction) -> Result<SampledFunction> {
        self.ensure_grid(f.grid())?;
        Ok(SampledFunction::from_raw(self.grid, self.apply_raw(f.values())))
    }

    pub(crate) fn apply_raw(&self, f: &[Complex64]) -> Vec<Complex64> {
        let n = self.grid.len();
        let mut out = vec![Complex64::default(); n];
        for (&x, m) in &self.terms {
            accumulate_shifted(&mut out, m, f, x);
        }
        out
    }

    /// Operator product `self ∘ other`.
    pub fn compose(&self, other: &ShiftOperator) -> Result<ShiftOperator> {
        self.ensure_grid(&other.grid)?;
        let n = self.grid.len();
        let mut targets: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        for &y in self.terms.keys() {
            for &z in other.terms.keys() {
                targets.entry((y + z) % n).or_default().push((y, z));
            }
        }
        let terms: Vec<(usize, Vec<Complex64>)> = targets
            .into_par_iter()
            .map(|(x, pairs)| {
                let mut acc = vec![Complex64::default(); n];
                // pairs are in ascending y, so the reduction order is fixed
                for (y, z) in pairs {
                    let m = &self.terms[&y];
                    let nz = &other.terms[&z];
                    accumulate_shifted(&mut acc, m, nz, y);
                }
                (x, acc)
            })
            .collect();
        let mut out = ShiftOperator {
            grid: self.grid,
            terms: terms.into_iter().collect(),
        };
        out.drop_zeros();
        Ok(out)
    }

    /// Involution `M*`, the Hilbert-space adjoint.
    pub fn adjoint(&self) -> ShiftOperator {
        let n = self.grid.len();
        let terms = self
            .terms
            .iter()
            .map(|(&x, m)| {
                let target = (n - x) % n;
                // coefficient at −x is conj(m_x(· + x))
                let values = (0..n).map(|l| m[(l + x) % n].conj()).collect();
                (target, values)
            })
            .collect();
        ShiftOperator { grid: self.grid, terms }
    }

    pub fn scale(&self, factor: Complex64) -> ShiftOperator {
        let mut out = ShiftOperator {
            grid: self.grid,
            terms: self
                .terms
                .iter()
                .map(|(&x, m)| (x, m.iter().map(|v| v * factor).collect()))
                .collect(),
        };
        out.drop_zeros();
        out
    }

    pub fn add(&self, other: &ShiftOperator) -> Result<ShiftOperator> {
        self.ensure_grid(&other.grid)?;
        let mut out = self.clone();
        for (&x, m) in &other.terms {
            out.add_term(x, m);
        }
        out.drop_zeros();
        Ok(out)
    }

    pub fn sub(&self, other: &ShiftOperator) -> Result<ShiftOperator> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// `‖M‖_{A_w} = Σ_x ‖m_x‖_∞ w(x)`.
    pub fn aw_norm(&self, w: &WeightSpec) -> Result<f64> {
        let parts = self
            .terms
            .iter()
            .map(|(&x, m)| Ok(sup(m) * w.eval(self.real_shift(x))?))
            .collect::<Result<Vec<f64>>>()?;
        Ok(pairwise_sum(&parts))
    }

    /// Unweighted `Σ_x ‖m_x‖_∞`, an upper bound for every `L^p` operator norm.
    pub fn sup_sum(&self) -> f64 {
        let parts: Vec<f64> = self.terms.values().map(|m| sup(m)).collect();
        pairwise_sum(&parts)
    }

    /// Drops terms whose multiplier has sup norm below `threshold`.
    /// Returns the unweighted `A_w` mass removed.
    pub fn prune(&mut self, threshold: f64) -> f64 {
        if threshold <= 0.0 {
            return 0.0;
        }
        let mut removed = 0.0;
        self.terms.retain(|_, m| {
            let s = sup(m);
            if s < threshold {
                removed += s;
                false
            } else {
                true
            }
        });
        removed
    }

    /// `max_x ‖m_x − n_x‖_∞`, used for approximate equality tests.
    pub fn max_difference(&self, other: &ShiftOperator) -> Result<f64> {
        let diff = self.sub(other)?;
        Ok(diff.terms.values().map(|m| sup(m)).fold(0.0, f64::max))
    }

    /// Self-adjointness defect `‖M − M*‖_{A_1} / ‖M‖_{A_1}`.
    pub fn self_adjoint_defect(&self) -> f64 {
        let scale = self.sup_sum();
        if scale == 0.0 {
            return 0.0;
        }
        self.sub(&self.adjoint())
            .map(|d| d.sup_sum() / scale)
            .unwrap_or(f64::INFINITY)
    }
}
