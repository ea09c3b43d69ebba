//! Dense complex linear algebra, weighted traces, functional calculus and quadrature.

pub mod eigen;
pub mod matrix;
pub mod quad;
pub mod trace;

pub use eigen::{eigh, eigh_sparse, op_norm, svd_right, unit, BlockDiag, BlockSpectral, EigenDecomposition};
pub use matrix::{c, inner, inverse, re, solve, ComplexMatrix, HermitianMatrix, SparseMatrix, C64, I, ONE, ZERO};
pub use quad::{
    integrate, integrate_breaks, quad_half_line, quad_vertical_line, quad_vertical_line_auto, quad_vertical_line_tan, ContourSpec,
    HalfLineOpts, QuadOpts, QuadResult,
};
pub use trace::{func_calc, trace_norm, trace_tau, TraceWeights};
