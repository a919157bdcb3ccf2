//! Problem data, KKT assembly, residuals and the dense direct solve.
//!
//! The saddle-point system has the 3×3 block layout
//!
//! ```text
//! [ D  0  Aᵀ ] [x]   [r_x]
//! [ 0  0  Bᵀ ] [z] = [r_z]
//! [ A  B  0  ] [y]   [r_y]
//! ```
//!
//! with `A: ny×nx`, `B: ny×nz`, `D: nx×nx` symmetric positive definite.
//! The stated layout places `D` in the `x` block, so it is sized `nx×nx`.

use std::path::Path;

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaddleError};
use crate::linalg;

/// Relative tolerance used by the rank and definiteness checks on construction.
pub const RANK_TOL: f64 = 1e-12;

/// Parameters that produced a generated problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub s: f64,
    pub seed: u64,
}

/// Validated problem data. Immutable once constructed.
#[derive(Debug, Clone)]
pub struct SaddleProblem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    d: DMatrix<f64>,
    rx: DVector<f64>,
    rz: DVector<f64>,
    ry: DVector<f64>,
    m_frobenius: f64,
    provenance: Option<Provenance>,
}

/// The assembled KKT matrix and right-hand side.
#[derive(Debug, Clone)]
pub struct KktSystem {
    pub m: DMatrix<f64>,
    pub r: DVector<f64>,
}

/// A point `[x; z; y]` in the stacking order of the KKT system.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub x: DVector<f64>,
    pub z: DVector<f64>,
    pub y: DVector<f64>,
}

impl Iterate {
    pub fn zeros(nx: usize, nz: usize, ny: usize) -> Self {
        Iterate {
            x: DVector::zeros(nx),
            z: DVector::zeros(nz),
            y: DVector::zeros(ny),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len() + self.z.len() + self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stack(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.len());
        let (nx, nz) = (self.x.len(), self.z.len());
        v.rows_mut(0, nx).copy_from(&self.x);
        v.rows_mut(nx, nz).copy_from(&self.z);
        v.rows_mut(nx + nz, self.y.len()).copy_from(&self.y);
        v
    }

    /// Splits a stacked vector. Panics if `v.len() != nx + nz + ny`.
    pub fn from_stacked(v: &DVector<f64>, nx: usize, nz: usize, ny: usize) -> Self {
        assert_eq!(v.len(), nx + nz + ny, "stacked vector length");
        Iterate {
            x: v.rows(0, nx).into_owned(),
            z: v.rows(nx, nz).into_owned(),
            y: v.rows(nx + nz, ny).into_owned(),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.x.norm_squared() + self.z.norm_squared() + self.y.norm_squared()).sqrt()
    }
}

impl SaddleProblem {
    /// Validates and stores the problem data.
    ///
    /// `d` is symmetrized; a warning is logged when the input deviates from
    /// symmetry by more than `1e-12` relative.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        d: DMatrix<f64>,
        rx: DVector<f64>,
        rz: DVector<f64>,
        ry: DVector<f64>,
    ) -> Result<Self> {
        let (ny, nx) = a.shape();
        let nz = b.ncols();
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(SaddleError::InvalidProblem(format!(
                "all block sizes must be positive (nx={nx}, ny={ny}, nz={nz})"
            )));
        }
        if ny > nx {
            return Err(SaddleError::InvalidProblem(format!(
                "ny={ny} exceeds nx={nx}; A·Aᵀ cannot be invertible"
            )));
        }
        if nz > ny {
            return Err(SaddleError::InvalidProblem(format!(
                "nz={nz} exceeds ny={ny}; Bᵀ·B cannot be invertible"
            )));
        }
        check_dim("B rows", ny, b.nrows())?;
        check_dim("D rows", nx, d.nrows())?;
        check_dim("D cols", nx, d.ncols())?;
        check_dim("rx", nx, rx.len())?;
        check_dim("rz", nz, rz.len())?;
        check_dim("ry", ny, ry.len())?;

        let all_finite = a.iter().chain(b.iter()).chain(d.iter()).all(|v| v.is_finite())
            && rx.iter().chain(rz.iter()).chain(ry.iter()).all(|v| v.is_finite());
        if !all_finite {
            return Err(SaddleError::InvalidProblem("non-finite entry in problem data".into()));
        }

        let dev = linalg::asymmetry(&d);
        if dev > RANK_TOL {
            warn!("D deviates from symmetry by {dev:.3e} (relative); symmetrizing");
        }
        let d = linalg::symmetrize(&d);

        let (dmin, dmax) = linalg::sym_eigen_extremes(&d);
        if !(dmin > RANK_TOL * dmax.abs()) || dmax <= 0.0 {
            return Err(SaddleError::InvalidProblem(format!(
                "D is not positive definite (eigenvalues in [{dmin:.3e}, {dmax:.3e}])"
            )));
        }
        let (smax, smin) = linalg::singular_extremes(&(&a * a.transpose()));
        if !(smin > RANK_TOL * smax) {
            return Err(SaddleError::InvalidProblem(format!(
                "A·Aᵀ is singular (singular values in [{smin:.3e}, {smax:.3e}])"
            )));
        }
        let (smax, smin) = linalg::singular_extremes(&(b.transpose() * &b));
        if !(smin > RANK_TOL * smax) {
            return Err(SaddleError::InvalidProblem(format!(
                "Bᵀ·B is singular (singular values in [{smin:.3e}, {smax:.3e}])"
            )));
        }

        let m_frobenius =
            (d.norm_squared() + 2.0 * a.norm_squared() + 2.0 * b.norm_squared()).sqrt();
        Ok(SaddleProblem {
            a,
            b,
            d,
            rx,
            rz,
            ry,
            m_frobenius,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn nx(&self) -> usize {
        self.a.ncols()
    }
    pub fn ny(&self) -> usize {
        self.a.nrows()
    }
    pub fn nz(&self) -> usize {
        self.b.ncols()
    }
    /// `nx + nz + ny`.
    pub fn dim(&self) -> usize {
        self.nx() + self.nz() + self.ny()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn rx(&self) -> &DVector<f64> {
        &self.rx
    }
    pub fn rz(&self) -> &DVector<f64> {
        &self.rz
    }
    pub fn ry(&self) -> &DVector<f64> {
        &self.ry
    }

    pub fn rhs(&self) -> Iterate {
        Iterate {
            x: self.rx.clone(),
            z: self.rz.clone(),
            y: self.ry.clone(),
        }
    }

    pub fn rhs_norm(&self) -> f64 {
        self.rhs().norm()
    }

    pub fn zero_iterate(&self) -> Iterate {
        Iterate::zeros(self.nx(), self.nz(), self.ny())
    }

    /// Frobenius norm of the KKT matrix, computed from the blocks.
    pub fn kkt_frobenius(&self) -> f64 {
        self.m_frobenius
    }

    pub fn check_iterate(&self, u: &Iterate) -> Result<()> {
        check_dim("x", self.nx(), u.x.len())?;
        check_dim("z", self.nz(), u.z.len())?;
        check_dim("y", self.ny(), u.y.len())
    }

    /// Block-wise product `M·u`, without forming `M`.
    pub fn apply_kkt(&self, u: &Iterate) -> Iterate {
        Iterate {
            x: &self.d * &u.x + self.a.tr_mul(&u.y),
            z: self.b.tr_mul(&u.y),
            y: &self.a * &u.x + &self.b * &u.z,
        }
    }

    /// Stacked-vector form of [`SaddleProblem::apply_kkt`].
    pub fn apply_kkt_stacked(&self, v: &DVector<f64>) -> DVector<f64> {
        let u = Iterate::from_stacked(v, self.nx(), self.nz(), self.ny());
        self.apply_kkt(&u).stack()
    }

    /// Rounding-level residual for an essentially exact iterate:
    /// `64·eps·(‖M‖_F·‖u‖ + ‖r‖)`.
    pub fn residual_floor(&self, u: &Iterate) -> f64 {
        64.0 * f64::EPSILON * (self.m_frobenius * u.norm() + self.rhs_norm())
    }

    // --- file format -----------------------------------------------------

    pub fn to_file(&self) -> ProblemFile {
        ProblemFile {
            nx: self.nx(),
            ny: self.ny(),
            nz: self.nz(),
            a: row_major(&self.a),
            b: row_major(&self.b),
            d: row_major(&self.d),
            rx: self.rx.as_slice().to_vec(),
            rz: self.rz.as_slice().to_vec(),
            ry: self.ry.as_slice().to_vec(),
            provenance: self.provenance,
        }
    }

    pub fn from_file(file: ProblemFile) -> Result<Self> {
        let ProblemFile {
            nx,
            ny,
            nz,
            a,
            b,
            d,
            rx,
            rz,
            ry,
            provenance,
        } = file;
        check_dim("A", ny * nx, a.len())?;
        check_dim("B", ny * nz, b.len())?;
        check_dim("D", nx * nx, d.len())?;
        let p = SaddleProblem::new(
            DMatrix::from_row_slice(ny, nx, &a),
            DMatrix::from_row_slice(ny, nz, &b),
            DMatrix::from_row_slice(nx, nx, &d),
            DVector::from_vec(rx),
            DVector::from_vec(rz),
            DVector::from_vec(ry),
        )?;
        Ok(match provenance {
            Some(prov) => p.with_provenance(prov),
            None => p,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = self.to_json()?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }
}

/// On-disk JSON layout. Matrices are flat row-major arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "D")]
    pub d: Vec<f64>,
    pub rx: Vec<f64>,
    pub rz: Vec<f64>,
    pub ry: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

fn check_dim(block: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(SaddleError::Dimension {
            block,
            expected,
            got,
        });
    }
    Ok(())
}

/// Places the blocks into the dense `(nx+nz+ny)²` KKT matrix.
pub fn assemble_kkt(problem: &SaddleProblem) -> KktSystem {
    let (nx, nz, ny) = (problem.nx(), problem.nz(), problem.ny());
    let n = nx + nz + ny;
    let mut m = DMatrix::zeros(n, n);
    m.view_mut((0, 0), (nx, nx)).copy_from(problem.d());
    m.view_mut((0, nx + nz), (nx, ny)).copy_from(&problem.a().transpose());
    m.view_mut((nx, nx + nz), (nz, ny)).copy_from(&problem.b().transpose());
    m.view_mut((nx + nz, 0), (ny, nx)).copy_from(problem.a());
    m.view_mut((nx + nz, nx), (ny, nz)).copy_from(problem.b());
    KktSystem {
        m,
        r: problem.rhs().stack(),
    }
}

/// `‖M·u − r‖₂`.
pub fn kkt_residual(problem: &SaddleProblem, u: &Iterate) -> Result<f64> {
    problem.check_iterate(u)?;
    Ok(kkt_residual_unchecked(problem, u))
}

pub(crate) fn kkt_residual_unchecked(problem: &SaddleProblem, u: &Iterate) -> f64 {
    let mu = problem.apply_kkt(u);
    let sq = (mu.x - problem.rx()).norm_squared()
        + (mu.z - problem.rz()).norm_squared()
        + (mu.y - problem.ry()).norm_squared();
    sq.sqrt()
}

/// Partial-pivoting LU solve of the assembled KKT system, with one step of
/// iterative refinement.
pub fn direct_solve(problem: &SaddleProblem) -> Result<Iterate> {
    let kkt = assemble_kkt(problem);
    let (nx, nz, ny) = (problem.nx(), problem.nz(), problem.ny());
    let lu = kkt.m.clone().lu();
    let fail = || SaddleError::Factorization {
        block: "KKT matrix M",
        condition: Some(linalg::cond2(&kkt.m)),
    };
    let mut u = lu.solve(&kkt.r).ok_or_else(fail)?;
    let res = &kkt.r - &kkt.m * &u;
    if let Some(du) = lu.solve(&res) {
        u += du;
    }
    let sol = Iterate::from_stacked(&u, nx, nz, ny);
    let resid = kkt_residual_unchecked(problem, &sol);
    if !resid.is_finite() || resid > 1e-10 * problem.rhs_norm().max(1.0) {
        return Err(fail());
    }
    Ok(sol)
}
