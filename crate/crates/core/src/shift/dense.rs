//! Dense-matrix oracle and spectral bounds.
//!
//! A shift operator only couples samples whose indices differ by a combination of
//! its shifts, so with `d = gcd(n, shifts)` it is block diagonal over the residues
//! modulo `d`. Spectral bounds are computed per block; this keeps frame operators
//! (whose shifts are multiples of `1/β`) cheap even on fine grids.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ShiftOperator;
use crate::amalgam::Exponent;
use crate::error::{GaborError, Result};

/// Largest grid accepted by [`to_dense`].
pub const MAX_DENSE_SAMPLES: usize = 4096;

/// Blocks up to this size are diagonalised directly; larger ones use power iteration.
pub const DENSE_BLOCK_LIMIT: usize = 1024;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;
const SINGULAR_TOL: f64 = 1e-10;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The matrix of `f ↦ M f` in the sample basis.
pub fn to_dense(op: &ShiftOperator) -> Result<DMatrix<Complex64>> {
    let n = op.grid().len();
    if n > MAX_DENSE_SAMPLES {
        return Err(GaborError::GridTooLarge(n));
    }
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for (x, m) in op.terms() {
        for (l, v) in m.iter().enumerate() {
            out[(l, (l + n - x) % n)] += v;
        }
    }
    Ok(out)
}

/// Period `d` of the block structure.
fn block_modulus(op: &ShiftOperator) -> usize {
    let n = op.grid().len();
    op.terms().fold(n, |d, (x, _)| gcd(d, x))
}

/// Diagonal block for the residue class `r` modulo `d`.
fn block(op: &ShiftOperator, d: usize, r: usize) -> DMatrix<Complex64> {
    let n = op.grid().len();
    let size = n / d;
    let mut out = DMatrix::<Complex64>::zeros(size, size);
    for (x, m) in op.terms() {
        for u in 0..size {
            let l = r + d * u;
            let col = ((l + n - x) % n - r) / d;
            out[(u, col)] += m[l];
        }
    }
    out
}

/// Smallest and largest eigenvalue of a Hermitian shift operator.
pub fn hermitian_extremes(op: &ShiftOperator) -> Result<(f64, f64)> {
    if op.is_empty() {
        return Ok((0.0, 0.0));
    }
    let d = block_modulus(op);
    let size = op.grid().len() / d;
    if size > DENSE_BLOCK_LIMIT {
        return power_extremes(op);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for r in 0..d {
        let eig = block(op, d, r).symmetric_eigenvalues();
        for &e in eig.iter() {
            lo = lo.min(e);
            hi = hi.max(e);
        }
    }
    Ok((lo, hi))
}

fn rayleigh(op: &ShiftOperator, x: &[Complex64], shift: Option<f64>) -> (Vec<Complex64>, f64) {
    let mut y = op.apply_raw(x);
    if let Some(s) = shift {
        for (yy, xx) in y.iter_mut().zip(x) {
            *yy = xx * s - *yy;
        }
    }
    let num: f64 = y.iter().zip(x).map(|(a, b)| (a * b.conj()).re).sum();
    let den: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    (y, num / den)
}

/// Dominant eigenvalue of `op` (or of `shift·I − op`) by power iteration.
fn power_iteration(op: &ShiftOperator, shift: Option<f64>) -> Result<f64> {
    let n = op.grid().len();
    // deterministic start with energy in every mode
    let mut x: Vec<Complex64> = (0..n)
        .map(|l| Complex64::new(1.0 + 0.5 * (l as f64 * 0.618).sin(), 0.25 * (l as f64 * 1.7).cos()))
        .collect();
    let mut last = f64::NAN;
    for it in 0..POWER_MAX_ITER {
        let (y, lambda) = rayleigh(op, &x, shift);
        if (lambda - last).abs() <= POWER_TOL * lambda.abs().max(f64::MIN_POSITIVE) {
            return Ok(lambda);
        }
        let norm = y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        x = y.into_iter().map(|v| v / norm).collect();
        last = lambda;
        if it + 1 == POWER_MAX_ITER {
            break;
        }
    }
    Err(GaborError::NotConverged {
        iterations: POWER_MAX_ITER,
        residual: last,
    })
}

/// Two-sided power iteration: the top of the spectrum, then the top of `λ_max I − H`.
fn power_extremes(op: &ShiftOperator) -> Result<(f64, f64)> {
    let hi = power_iteration(op, None)?;
    let gap = power_iteration(op, Some(hi))?;
    Ok((hi - gap, hi))
}

/// Extreme eigenvalues `(A, B)` of `M*M`, i.e. the optimal bounds in
/// `A‖f‖² ≤ ‖Mf‖² ≤ B‖f‖²`.
pub fn quadratic_form_bounds(op: &ShiftOperator) -> Result<(f64, f64)> {
    let gram = op.adjoint().compose(op)?;
    let (lo, hi) = hermitian_extremes(&gram)?;
    Ok((lo.max(0.0), hi.max(0.0)))
}

/// Bounds `(lower, upper)` on `‖Mf‖_p² / ‖f‖_p²`.
///
/// For `p = 2` these are the eigenvalue extremes of `M*M`, and a lower bound below
/// `10⁻¹⁰·upper` is reported as [`GaborError::SingularOperator`]. For `p ∈ {1, ∞}`
/// the upper bound is the exact matrix norm (max column / row sum) and the lower
/// bound is the diagonal-dominance estimate, which may be 0 for invertible operators.
pub fn operator_norm_bounds(op: &ShiftOperator, p: Exponent) -> Result<(f64, f64)> {
    match p {
        Exponent::Finite(2.0) => {
            let (lower, upper) = quadratic_form_bounds(op)?;
            if !(lower > SINGULAR_TOL * upper) {
                return Err(GaborError::SingularOperator { lower, upper });
            }
            Ok((lower, upper))
        }
        Exponent::Infinity => {
            let (lower, upper) = row_bounds(op, false);
            Ok((lower * lower, upper * upper))
        }
        Exponent::Finite(1.0) => {
            let (lower, upper) = row_bounds(op, true);
            Ok((lower * lower, upper * upper))
        }
        Exponent::Finite(e) => Err(GaborError::UnsupportedExponent(e)),
    }
}

/// Max absolute row (or column) sum and the diagonal-dominance margin.
fn row_bounds(op: &ShiftOperator, columns: bool) -> (f64, f64) {
    let n = op.grid().len();
    let mut upper = 0.0_f64;
    let mut lower = f64::INFINITY;
    for i in 0..n {
        let mut diag = 0.0;
        let mut off = 0.0;
        for (x, m) in op.terms() {
            // column i of M holds m_x[i + x]; row i holds m_x[i]
            let v = if columns { m[(i + x) % n].norm() } else { m[i].norm() };
            if x == 0 {
                diag += v;
            } else {
                off += v;
            }
        }
        upper = upper.max(diag + off);
        lower = lower.min((diag - off).max(0.0));
    }
    (lower, upper)
}
