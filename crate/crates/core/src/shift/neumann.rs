//! Inversion in `A_w` by the Neumann series
//! `(M*M)^{-1} = τ Σ_{k≥0} (I − τ M*M)^k`, `τ = 2/(A+B)`, then `M^{-1} = (M*M)^{-1} M*`.
//!
//! Each partial sum stays inside the algebra, so the result is again a finite
//! shift operator. The series is cut when the `A_w` norm of the newest term drops
//! below `tol` times the norm of the accumulated sum.

use num_complex::Complex64;
use serde::Serialize;

use super::ShiftOperator;
use crate::error::{GaborError, Result};
use crate::weight::WeightSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct NeumannOptions {
    pub tol: f64,
    pub max_terms: usize,
    /// Terms whose multiplier sup norm falls below this are dropped after each step.
    pub prune: f64,
    /// Weight of the `A_w` norm used by the stopping rule.
    pub weight: WeightSpec,
}

impl Default for NeumannOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_terms: 100_000,
            prune: 1e-14,
            weight: WeightSpec::unit(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeumannInverse {
    pub inverse: ShiftOperator,
    pub report: NeumannReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeumannReport {
    /// Number of powers summed (the zeroth power included).
    pub terms: usize,
    /// `A_w` norm of the last term that was added.
    pub last_term_norm: f64,
    /// Unweighted `A_w` mass discarded by pruning, accumulated over the series.
    pub pruned_mass: f64,
    /// `Σ_x ‖e_x‖_∞` of `R·M − I`; bounds `‖R·M − I‖` on every `L^p`.
    pub left_residual: f64,
    /// Same for `M·R − I`.
    pub right_residual: f64,
}

impl NeumannReport {
    pub fn residual(&self) -> f64 {
        self.left_residual.max(self.right_residual)
    }
}

/// Inverts `op` given bounds `0 < A ≤ B` for the quadratic form of `op* op`.
pub fn neumann_inverse(op: &ShiftOperator, lower: f64, upper: f64, opts: &NeumannOptions) -> Result<NeumannInverse> {
    if !(lower > 0.0) || !upper.is_finite() || upper < lower {
        return Err(GaborError::SingularOperator { lower, upper });
    }
    let grid = *op.grid();
    let identity = ShiftOperator::identity(grid);
    let adjoint = op.adjoint();
    let gram = adjoint.compose(op)?;
    let tau = 2.0 / (lower + upper);
    let mut step = identity.sub(&gram.scale(Complex64::new(tau, 0.0)))?;
    let mut pruned_mass = step.prune(opts.prune);

    let mut power = identity.clone();
    let mut sum = identity.clone();
    let mut terms = 1;
    let mut last_term_norm = 1.0;
    loop {
        if terms >= opts.max_terms {
            return Err(GaborError::NotConverged {
                iterations: terms,
                residual: last_term_norm,
            });
        }
        power = power.compose(&step)?;
        pruned_mass += power.prune(opts.prune);
        sum = sum.add(&power)?;
        terms += 1;
        last_term_norm = power.aw_norm(&opts.weight)?;
        if last_term_norm < opts.tol * sum.aw_norm(&opts.weight)? {
            break;
        }
        // keep the step operator free of accumulated round-off dust
        if terms % 64 == 0 {
            step.prune(opts.prune);
        }
    }

    let gram_inverse = sum.scale(Complex64::new(tau, 0.0));
    let inverse = gram_inverse.compose(&adjoint)?;
    let left_residual = inverse.compose(op)?.sub(&identity)?.sup_sum();
    let right_residual = op.compose(&inverse)?.sub(&identity)?.sup_sum();
    Ok(NeumannInverse {
        inverse,
        report: NeumannReport {
            terms,
            last_term_norm,
            pruned_mass,
            left_residual,
            right_residual,
        },
    })
}
