//! Periodic sampling grid, sampled functions and time-frequency shifts.
//!
//! Functions live on `{0, Δ, …, L − Δ}` with `Δ = 1/s`; every operation wraps
//! around the period. Time shifts are stored in samples and frequencies in
//! units of `1/L`, both reduced modulo `n = L·s`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GaborError, Result};

/// Relative slack used when deciding whether a real number is an integer.
const COMMENSURATE_TOL: f64 = 1e-9;

/// Rounds `value` to the nearest integer if it is one up to a relative tolerance.
pub(crate) fn as_integer(value: f64) -> Option<i64> {
    if !value.is_finite() {
        return None;
    }
    let r = value.round();
    if (value - r).abs() <= COMMENSURATE_TOL * value.abs().max(1.0) {
        Some(r as i64)
    } else {
        None
    }
}

/// Reduces an integer offset into `0..n`.
#[inline]
pub(crate) fn wrap(index: i64, n: usize) -> usize {
    index.rem_euclid(n as i64) as usize
}

/// Canonical signed representative of `index` modulo `n`, in `(-n/2, n/2]`.
#[inline]
pub fn signed_index(index: usize, n: usize) -> i64 {
    let i = (index % n) as i64;
    if 2 * i > n as i64 {
        i - n as i64
    } else {
        i
    }
}

/// Index-ascending pairwise summation.
///
/// The tree shape depends only on the length, so results are reproducible
/// regardless of how callers schedule the work that produced the terms.
pub fn pairwise_sum<T>(values: &[T]) -> T
where
    T: Copy + Default + std::ops::Add<Output = T>,
{
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        values.iter().fold(T::default(), |acc, &v| acc + v)
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

/// Uniform periodic grid over `[0, L)` with `s` samples per unit length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "L")]
    period: usize,
    #[serde(rename = "s")]
    samples_per_unit: usize,
}

impl GridSpec {
    /// Only one-dimensional grids are supported.
    pub const DIMENSION: usize = 1;

    pub fn new(period: usize, samples_per_unit: usize) -> Result<Self> {
        if period == 0 || samples_per_unit == 0 {
            return Err(GaborError::InvalidGrid(format!(
                "period {period} and samples per unit {samples_per_unit} must be positive"
            )));
        }
        period
            .checked_mul(samples_per_unit)
            .ok_or_else(|| GaborError::InvalidGrid("sample count overflows".into()))?;
        Ok(Self {
            period,
            samples_per_unit,
        })
    }

    /// Period `L`.
    pub fn period(&self) -> usize {
        self.period
    }

    /// Samples per unit length `s`.
    pub fn samples_per_unit(&self) -> usize {
        self.samples_per_unit
    }

    /// Total sample count `n = L·s`.
    pub fn len(&self) -> usize {
        self.period * self.samples_per_unit
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid step `Δ = 1/s`.
    pub fn step(&self) -> f64 {
        1.0 / self.samples_per_unit as f64
    }

    /// Position of sample `l` on `[0, L)`.
    pub fn position(&self, l: usize) -> f64 {
        l as f64 * self.step()
    }

    /// Position of sample `l` as the periodic representative in `[-L/2, L/2)`.
    pub fn centered_position(&self, l: usize) -> f64 {
        let x = self.position(l);
        let half = self.period as f64 / 2.0;
        if x >= half {
            x - self.period as f64
        } else {
            x
        }
    }

    /// Converts a real shift into a sample offset modulo `n`.
    pub fn shift_to_samples(&self, x: f64) -> Result<usize> {
        let k = as_integer(x * self.samples_per_unit as f64).ok_or(GaborError::NonCommensurateShift(x))?;
        Ok(wrap(k, self.len()))
    }

    /// Converts a frequency into its index (units of `1/L`) modulo `n`.
    pub fn frequency_to_index(&self, omega: f64) -> Result<usize> {
        let m = as_integer(omega * self.period as f64).ok_or(GaborError::NonCommensurateFrequency(omega))?;
        Ok(wrap(m, self.len()))
    }

    /// Canonical real shift in `(-L/2, L/2]` for a sample offset.
    pub fn samples_to_shift(&self, samples: usize) -> f64 {
        signed_index(samples, self.len()) as f64 * self.step()
    }

    fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(GaborError::GridMismatch)
        }
    }
}

/// Complex samples of a periodic function on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(GaborError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(GaborError::NonFinite(bad));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn constant(grid: GridSpec, value: Complex64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f` at the grid positions `l·Δ ∈ [0, L)`.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = (0..grid.len()).map(|l| f(grid.position(l))).collect();
        Self::new(grid, values)
    }

    /// Samples a real function at the grid positions.
    pub fn from_real_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Unit impulse at sample `index`.
    pub fn impulse(grid: GridSpec, index: usize) -> Self {
        let mut out = Self::zeros(grid);
        out.values[index % grid.len()] = Complex64::new(1.0, 0.0);
        out
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// Largest modulus over the samples.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Discrete `L²` norm `(Δ Σ |f|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let sq: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        (self.grid.step() * pairwise_sum(&sq)).sqrt()
    }

    /// Discrete `L^p` norm for finite `p ≥ 1`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let pw: Vec<f64> = self.values.iter().map(|v| v.norm().powf(p)).collect();
        (self.grid.step() * pairwise_sum(&pw)).powf(1.0 / p)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| v * factor).collect())
    }

    pub fn conj(&self) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| v.conj()).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        ))
    }

    /// Periodic translation by a sample offset: `out[l] = f[l − shift]`.
    pub fn translate_samples(&self, shift: usize) -> Self {
        let n = self.len();
        let shift = shift % n;
        let mut out = Vec::with_capacity(n);
        out.extend_from_slice(&self.values[n - shift..]);
        out.extend_from_slice(&self.values[..n - shift]);
        Self::from_raw(self.grid, out)
    }

    /// Modulation by the frequency index `m` (frequency `m/L`).
    pub fn modulate_index(&self, m: usize) -> Self {
        let n = self.len();
        let m = (m % n) as u64;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(l, v)| v * unit_phase((m * l as u64) % n as u64, n))
            .collect();
        Self::from_raw(self.grid, values)
    }
}

/// `e^{2πi k/n}` with the argument reduced exactly before evaluation.
#[inline]
pub(crate) fn unit_phase(k: u64, n: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)
}

/// A time-frequency shift `λ = (x, ω)` on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TFShift {
    grid: GridSpec,
    shift: usize,
    frequency: usize,
}

impl TFShift {
    /// Builds `λ = (x, ω)`; `x` must be a multiple of `Δ` and `ω` a multiple of `1/L`.
    pub fn new(grid: GridSpec, x: f64, omega: f64) -> Result<Self> {
        Ok(Self {
            grid,
            shift: grid.shift_to_samples(x)?,
            frequency: grid.frequency_to_index(omega)?,
        })
    }

    /// Builds a shift from sample offset and frequency index.
    pub fn from_indices(grid: GridSpec, shift: usize, frequency: usize) -> Self {
        let n = grid.len();
        Self {
            grid,
            shift: shift % n,
            frequency: frequency % n,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn shift_samples(&self) -> usize {
        self.shift
    }

    pub fn frequency_index(&self) -> usize {
        self.frequency
    }

    /// Canonical real time shift.
    pub fn x(&self) -> f64 {
        self.grid.samples_to_shift(self.shift)
    }

    /// Canonical frequency, in `(-s/2, s/2]`.
    pub fn omega(&self) -> f64 {
        signed_index(self.frequency, self.grid.len()) as f64 / self.grid.period() as f64
    }

    /// Componentwise sum, reduced modulo the grid.
    pub fn compose(&self, other: &TFShift) -> TFShift {
        Self::from_indices(self.grid, self.shift + other.shift, self.frequency + other.frequency)
    }
}

/// `T_x f`, periodic translation by a real shift.
pub fn translate(f: &SampledFunction, x: f64) -> Result<SampledFunction> {
    let k = f.grid().shift_to_samples(x)?;
    Ok(f.translate_samples(k))
}

/// `M_ω f`, pointwise multiplication by `e^{2πiωx}`.
pub fn modulate(f: &SampledFunction, omega: f64) -> Result<SampledFunction> {
    let m = f.grid().frequency_to_index(omega)?;
    Ok(f.modulate_index(m))
}

/// `π(λ) f = M_ω T_x f`.
pub fn tf_shift(f: &SampledFunction, lambda: &TFShift) -> Result<SampledFunction> {
    f.grid().ensure_same(lambda.grid())?;
    Ok(f.translate_samples(lambda.shift).modulate_index(lambda.frequency))
}

/// Riemann inner product `Δ Σ f[l]·conj(g[l])`, conjugate-linear in `g`.
pub fn inner_product(f: &SampledFunction, g: &SampledFunction) -> Result<Complex64> {
    f.grid().ensure_same(g.grid())?;
    Ok(inner_product_raw(f.values(), g.values()) * f.grid().step())
}

/// `Σ f[l]·conj(g[l])` without the grid step.
pub(crate) fn inner_product_raw(f: &[Complex64], g: &[Complex64]) -> Complex64 {
    let terms: Vec<Complex64> = f.iter().zip(g).map(|(a, b)| a * b.conj()).collect();
    pairwise_sum(&terms)
}
