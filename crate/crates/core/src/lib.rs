//! Gabor frames on a sampled periodic grid, with Wiener amalgam norms, the Walnut
//! representation of frame-type operators, and inversion in a weighted algebra of
//! shift operators.

// `!(a > b)` is used on purpose so that NaN fails every gate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amalgam;
pub mod error;
pub mod frames;
pub mod gabor;
pub mod grid;
pub mod io;
pub mod lattice;
pub mod shift;
pub mod weight;
pub mod window;

pub use amalgam::{amalgam_norm, sequence_norm, AmalgamParams, Exponent, GaborCoefficients};
pub use error::{GaborError, Result};
pub use gabor::{analysis, partial_sum, regularized_sum, synthesis, walnut_operator, GaborSystem};
pub use grid::{inner_product, modulate, tf_shift, translate, GridSpec, SampledFunction, TFShift};
pub use lattice::TFLattice;
pub use shift::{neumann_inverse, NeumannOptions, ShiftOperator};
pub use weight::WeightSpec;
pub use window::Window;
