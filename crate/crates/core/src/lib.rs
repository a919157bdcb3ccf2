//! ADMM and ADMM-preconditioned GMRES for block saddle-point systems
//!
//! ```text
//! [ D  0  Aᵀ ] [x]   [r_x]
//! [ 0  0  Bᵀ ] [z] = [r_z]
//! [ A  B  0  ] [y]   [r_y]
//! ```
//!
//! together with dense spectral analysis of the ADMM iteration matrix,
//! closed-form convergence bounds, a seeded random problem generator, and the
//! benchmark pipeline used by the `saddle` binary.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod bench;
pub mod bounds;
pub mod error;
pub mod gmres;
pub mod linalg;
pub mod precond;
pub mod problem;
pub mod randgen;
pub mod spectral;

pub use admm::{admm_solve, admm_step, affine_offset, make_engine, AdmmEngine, IterationTrace, MethodTag, Solve};
pub use error::{Result, SaddleError};
pub use gmres::{admm_gmres_solve, gmres, GmresResult, LinearOperator, Side};
pub use precond::PrecondOperator;
pub use problem::{assemble_kkt, direct_solve, kkt_residual, Iterate, KktSystem, Provenance, SaddleProblem};
pub use randgen::{random_problem, sample_beta, GenSpec};
pub use spectral::{classify_and_verify, dtilde_extremes, Regime, SpectralReport};

pub use nalgebra::{DMatrix, DVector};
