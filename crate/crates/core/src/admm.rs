//! The three-step ADMM sweep at a fixed penalty parameter.
//!
//! One sweep maps `u = [x; z; y]` to
//!
//! ```text
//! x⁺ = (D + βAᵀA)⁻¹ (r_x − βAᵀ(Bz − r_y + y/β))
//! z⁺ = (βBᵀB)⁻¹     (r_z − βBᵀ(Ax⁺ − r_y + y/β))
//! y⁺ = y + β(Ax⁺ + Bz⁺ − r_y)
//! ```
//!
//! which is affine: `u⁺ = G(β)·u + b(β)`.

use nalgebra::{Cholesky, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaddleError};
use crate::linalg;
use crate::problem::{kkt_residual_unchecked, Iterate, SaddleProblem};

/// Which solver produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodTag {
    #[serde(rename = "admm")]
    Admm,
    #[serde(rename = "admm-gmres-left")]
    AdmmGmresLeft,
    #[serde(rename = "admm-gmres-right")]
    AdmmGmresRight,
}

impl MethodTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodTag::Admm => "admm",
            MethodTag::AdmmGmresLeft => "admm-gmres-left",
            MethodTag::AdmmGmresRight => "admm-gmres-right",
        }
    }
}

impl std::fmt::Display for MethodTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// KKT residual history of one solve.
///
/// `residuals[0]` is the residual at the starting point, so
/// `residuals.len() == iterations + 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationTrace {
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub epsilon: f64,
    pub method_tag: MethodTag,
    pub beta: f64,
}

impl IterationTrace {
    /// `residuals[k] / residuals[0]`; all zeros when the initial residual is zero.
    pub fn relative_residuals(&self) -> Vec<f64> {
        let r0 = self.residuals[0];
        if r0 == 0.0 {
            return vec![0.0; self.residuals.len()];
        }
        self.residuals.iter().map(|r| r / r0).collect()
    }

    pub fn final_rel_residual(&self) -> f64 {
        *self.relative_residuals().last().expect("trace is never empty")
    }
}

/// Residual convergence: `res ≤ ε·res₀`, or `res` already at rounding level.
pub(crate) fn residual_converged(res: f64, res0: f64, epsilon: f64, floor: f64) -> bool {
    res <= epsilon * res0 || res <= floor
}

/// A solved trace together with the final iterate.
#[derive(Debug, Clone)]
pub struct Solve {
    pub trace: IterationTrace,
    pub solution: Iterate,
}

/// Per-β factorizations of `D + βAᵀA` and `BᵀB`.
pub struct AdmmEngine<'a> {
    problem: &'a SaddleProblem,
    beta: f64,
    chol_local: Cholesky<f64, Dyn>,
    chol_global: Cholesky<f64, Dyn>,
}

impl<'a> AdmmEngine<'a> {
    pub fn new(problem: &'a SaddleProblem, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(SaddleError::Parameter(format!("beta must be positive, got {beta}")));
        }
        let local = problem.d() + problem.a().tr_mul(problem.a()) * beta;
        let chol_local = Cholesky::new(local).ok_or(SaddleError::Factorization {
            block: "D + beta*A'A",
            condition: None,
        })?;
        let global = problem.b().tr_mul(problem.b());
        let chol_global = Cholesky::new(global).ok_or(SaddleError::Factorization {
            block: "B'B",
            condition: None,
        })?;
        Ok(AdmmEngine {
            problem,
            beta,
            chol_local,
            chol_global,
        })
    }

    pub fn problem(&self) -> &'a SaddleProblem {
        self.problem
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Relative Frobenius reconstruction errors `(local, global)` of the two
    /// Cholesky factors.
    pub fn reconstruction_errors(&self) -> (f64, f64) {
        let p = self.problem;
        let local = p.d() + p.a().tr_mul(p.a()) * self.beta;
        let l = self.chol_local.l();
        let e_local = linalg::rel_diff_mat(&(&l * l.transpose()), &local);
        let global = p.b().tr_mul(p.b());
        let l = self.chol_global.l();
        let e_global = linalg::rel_diff_mat(&(&l * l.transpose()), &global);
        (e_local, e_global)
    }

    /// `(D + βAᵀA)⁻¹ v`.
    pub fn solve_local(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol_local.solve(v)
    }

    /// `(βBᵀB)⁻¹ v`.
    pub fn solve_global(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol_global.solve(v) / self.beta
    }

    /// One ADMM sweep. Panics on dimension mismatch; use [`admm_step`] for a
    /// checked call.
    pub fn step(&self, u: &Iterate) -> Iterate {
        let p = self.problem;
        let beta = self.beta;
        let (a, b) = (p.a(), p.b());

        // Shifted multiplier y/β − r_y, shared by both sub-solves.
        let shift: DVector<f64> = &u.y / beta - p.ry();

        let t = b * &u.z + &shift;
        let x = self.solve_local(&(p.rx() - a.tr_mul(&t) * beta));

        let ax = a * &x;
        let t = &ax + &shift;
        let z = self.solve_global(&(p.rz() - b.tr_mul(&t) * beta));

        let y = &u.y + (ax + b * &z - p.ry()) * beta;
        Iterate { x, z, y }
    }

    /// `b(β)`, the image of the zero iterate.
    pub fn affine_offset(&self) -> Iterate {
        self.step(&self.problem.zero_iterate())
    }
}

impl std::fmt::Debug for AdmmEngine<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdmmEngine")
            .field("beta", &self.beta)
            .field("dim", &self.problem.dim())
            .finish()
    }
}

pub fn make_engine(problem: &SaddleProblem, beta: f64) -> Result<AdmmEngine<'_>> {
    AdmmEngine::new(problem, beta)
}

pub fn admm_step(engine: &AdmmEngine<'_>, u: &Iterate) -> Result<Iterate> {
    engine.problem.check_iterate(u)?;
    Ok(engine.step(u))
}

pub fn affine_offset(engine: &AdmmEngine<'_>) -> Iterate {
    engine.affine_offset()
}

pub(crate) fn check_solve_params(epsilon: f64, max_iter: usize) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SaddleError::Parameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if max_iter == 0 {
        return Err(SaddleError::Parameter("max_iter must be at least 1".into()));
    }
    Ok(())
}

/// Iterates ADMM sweeps from `u0` until residual convergence or `max_iter`.
pub fn admm_solve(
    engine: &AdmmEngine<'_>,
    u0: &Iterate,
    epsilon: f64,
    max_iter: usize,
) -> Result<Solve> {
    check_solve_params(epsilon, max_iter)?;
    let p = engine.problem;
    p.check_iterate(u0)?;

    let res0 = kkt_residual_unchecked(p, u0);
    if !res0.is_finite() {
        return Err(SaddleError::Divergence { last_finite: 0 });
    }
    let mut residuals = vec![res0];
    let mut u = u0.clone();
    let mut converged = residual_converged(res0, res0, epsilon, p.residual_floor(&u));
    while !converged && residuals.len() <= max_iter {
        u = engine.step(&u);
        let res = kkt_residual_unchecked(p, &u);
        if !res.is_finite() {
            return Err(SaddleError::Divergence {
                last_finite: residuals.len() - 1,
            });
        }
        residuals.push(res);
        converged = residual_converged(res, res0, epsilon, p.residual_floor(&u));
    }
    let iterations = residuals.len() - 1;
    Ok(Solve {
        trace: IterationTrace {
            residuals,
            iterations,
            converged,
            epsilon,
            method_tag: MethodTag::Admm,
            beta: engine.beta,
        },
        solution: u,
    })
}
