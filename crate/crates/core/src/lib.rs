//! Band structures, spectral winding invariants and edge modes of
//! one-dimensional non-Hermitian photonic crystals, computed through the
//! 4×4 transfer-matrix formulation of Maxwell's equations.

// Index loops mirror the matrix formulas; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod edge;
pub mod linalg;
pub mod media;
pub mod spectra;
pub mod topology;
pub mod transfer;
