//! The ADMM preconditioner `P(β)`.
//!
//! `P` factors as an augmentation step times the block lower-triangular
//! ADMM sweep:
//!
//! ```text
//!     [ I  0  −βAᵀ ] [ D+βAᵀA   0     0    ]   [ D  −βAᵀB   Aᵀ  ]
//! P = [ 0  I  −βBᵀ ] [ βBᵀA     βBᵀB  0    ] = [ 0    0     Bᵀ  ]
//!     [ 0  0   I   ] [ A        B     −I/β ]   [ A    B    −I/β ]
//! ```
//!
//! so `P⁻¹` reuses the engine's two Cholesky factors and the iteration
//! matrix satisfies `G = I − P⁻¹M`.

use nalgebra::{DMatrix, DVector};

use crate::admm::AdmmEngine;
use crate::error::{Result, SaddleError};
use crate::problem::SaddleProblem;

/// Largest total dimension for which dense explicit matrices are formed.
pub const EXPLICIT_DIM_LIMIT: usize = 400;

pub(crate) fn guard(dim: usize) -> Result<()> {
    if dim > EXPLICIT_DIM_LIMIT {
        return Err(SaddleError::SizeGuard {
            dim,
            limit: EXPLICIT_DIM_LIMIT,
        });
    }
    Ok(())
}

/// Matrix-free `P(β)` with an optional cached dense copy.
pub struct PrecondOperator<'a> {
    engine: &'a AdmmEngine<'a>,
    explicit: Option<DMatrix<f64>>,
}

impl<'a> PrecondOperator<'a> {
    pub fn new(engine: &'a AdmmEngine<'a>) -> Self {
        PrecondOperator {
            engine,
            explicit: None,
        }
    }

    /// Also forms and caches the dense `P`, if the size guard allows it.
    pub fn with_explicit(engine: &'a AdmmEngine<'a>) -> Result<Self> {
        let p = assemble_precond_explicit(engine.problem(), engine.beta())?;
        Ok(PrecondOperator {
            engine,
            explicit: Some(p),
        })
    }

    pub fn engine(&self) -> &'a AdmmEngine<'a> {
        self.engine
    }

    pub fn explicit(&self) -> Option<&DMatrix<f64>> {
        self.explicit.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.engine.problem().dim()
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(SaddleError::Dimension {
                block: "preconditioner input",
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// `P⁻¹v`: undo the augmentation, then forward-substitute through the
    /// block lower factor.
    pub fn apply_inverse(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(v)?;
        Ok(self.apply_inverse_unchecked(v))
    }

    pub(crate) fn apply_inverse_unchecked(&self, v: &DVector<f64>) -> DVector<f64> {
        let p = self.engine.problem();
        let beta = self.engine.beta();
        let (nx, nz, ny) = (p.nx(), p.nz(), p.ny());
        let (a, b) = (p.a(), p.b());
        let v1 = v.rows(0, nx);
        let v2 = v.rows(nx, nz);
        let v3 = v.rows(nx + nz, ny);

        let w1 = v1 + a.tr_mul(&v3) * beta;
        let w2 = v2 + b.tr_mul(&v3) * beta;

        let x = self.engine.solve_local(&w1);
        let ax = a * &x;
        let z = self.engine.solve_global(&(w2 - b.tr_mul(&ax) * beta));
        let y = (ax + b * &z - v3) * beta;

        let mut out = DVector::zeros(nx + nz + ny);
        out.rows_mut(0, nx).copy_from(&x);
        out.rows_mut(nx, nz).copy_from(&z);
        out.rows_mut(nx + nz, ny).copy_from(&y);
        out
    }

    /// `P·u`, matrix-free.
    pub fn apply(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(u)?;
        Ok(self.apply_unchecked(u))
    }

    pub(crate) fn apply_unchecked(&self, u: &DVector<f64>) -> DVector<f64> {
        let p = self.engine.problem();
        let beta = self.engine.beta();
        let (nx, nz, ny) = (p.nx(), p.nz(), p.ny());
        let (a, b) = (p.a(), p.b());
        let x = u.rows(0, nx);
        let z = u.rows(nx, nz);
        let y = u.rows(nx + nz, ny);

        let bz = b * z;
        let top = p.d() * x - a.tr_mul(&bz) * beta + a.tr_mul(&y);
        let mid = b.tr_mul(&y);
        let bot = a * x + bz - y / beta;

        let mut out = DVector::zeros(nx + nz + ny);
        out.rows_mut(0, nx).copy_from(&top);
        out.rows_mut(nx, nz).copy_from(&mid);
        out.rows_mut(nx + nz, ny).copy_from(&bot);
        out
    }

    /// Dense `P(β)`, subject to the size guard.
    pub fn assemble(&self) -> Result<DMatrix<f64>> {
        match &self.explicit {
            Some(m) => Ok(m.clone()),
            None => assemble_precond_explicit(self.engine.problem(), self.engine.beta()),
        }
    }
}

pub fn apply_inverse(op: &PrecondOperator<'_>, v: &DVector<f64>) -> Result<DVector<f64>> {
    op.apply_inverse(v)
}

pub fn assemble_precond(op: &PrecondOperator<'_>) -> Result<DMatrix<f64>> {
    op.assemble()
}

/// Dense `[D, −βAᵀB, Aᵀ; 0, 0, Bᵀ; A, B, −I/β]`.
pub fn assemble_precond_explicit(problem: &SaddleProblem, beta: f64) -> Result<DMatrix<f64>> {
    guard(problem.dim())?;
    let (nx, nz, ny) = (problem.nx(), problem.nz(), problem.ny());
    let (a, b) = (problem.a(), problem.b());
    let n = nx + nz + ny;
    let mut m = DMatrix::zeros(n, n);
    m.view_mut((0, 0), (nx, nx)).copy_from(problem.d());
    m.view_mut((0, nx), (nx, nz)).copy_from(&(a.tr_mul(b) * -beta));
    m.view_mut((0, nx + nz), (nx, ny)).copy_from(&a.transpose());
    m.view_mut((nx, nx + nz), (nz, ny)).copy_from(&b.transpose());
    m.view_mut((nx + nz, 0), (ny, nx)).copy_from(a);
    m.view_mut((nx + nz, nx), (ny, nz)).copy_from(b);
    m.view_mut((nx + nz, nx + nz), (ny, ny))
        .copy_from(&(DMatrix::<f64>::identity(ny, ny) * (-1.0 / beta)));
    Ok(m)
}

/// Dense unit upper-triangular augmentation factor `[I 0 −βAᵀ; 0 I −βBᵀ; 0 0 I]`.
pub fn augmentation_factor(problem: &SaddleProblem, beta: f64) -> Result<DMatrix<f64>> {
    guard(problem.dim())?;
    let (nx, nz, ny) = (problem.nx(), problem.nz(), problem.ny());
    let n = nx + nz + ny;
    let mut m = DMatrix::identity(n, n);
    m.view_mut((0, nx + nz), (nx, ny)).copy_from(&(problem.a().transpose() * -beta));
    m.view_mut((nx, nx + nz), (nz, ny)).copy_from(&(problem.b().transpose() * -beta));
    Ok(m)
}

/// Dense block lower factor `[D+βAᵀA 0 0; βBᵀA βBᵀB 0; A B −I/β]`.
pub fn lower_factor(problem: &SaddleProblem, beta: f64) -> Result<DMatrix<f64>> {
    guard(problem.dim())?;
    let (nx, nz, ny) = (problem.nx(), problem.nz(), problem.ny());
    let (a, b) = (problem.a(), problem.b());
    let n = nx + nz + ny;
    let mut m = DMatrix::zeros(n, n);
    m.view_mut((0, 0), (nx, nx)).copy_from(&(problem.d() + a.tr_mul(a) * beta));
    m.view_mut((nx, 0), (nz, nx)).copy_from(&(b.tr_mul(a) * beta));
    m.view_mut((nx, nx), (nz, nz)).copy_from(&(b.tr_mul(b) * beta));
    m.view_mut((nx + nz, 0), (ny, nx)).copy_from(a);
    m.view_mut((nx + nz, nx), (ny, nz)).copy_from(b);
    m.view_mut((nx + nz, nx + nz), (ny, ny))
        .copy_from(&(DMatrix::<f64>::identity(ny, ny) * (-1.0 / beta)));
    Ok(m)
}
