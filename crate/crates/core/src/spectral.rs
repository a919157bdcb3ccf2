//! Explicit spectral analysis of the ADMM iteration.
//!
//! Everything here is dense and intended for desk-scale instances (total
//! dimension at most [`EXPLICIT_DIM_LIMIT`](crate::precond::EXPLICIT_DIM_LIMIT)).
//! The central objects are
//!
//! * `D̃ = (A D⁻¹ Aᵀ)⁻¹` with extreme eigenvalues `m ≤ ℓ` and `κ = ℓ/m`,
//! * `γ = max(β/m, ℓ/β)`,
//! * the `ny × ny` kernel `K(β) = [Qᵀ; −Pᵀ] K̃ [Q P]` with
//!   `K̃ = (D̃/β + I)⁻¹ − (βD̃⁻¹ + I)⁻¹`, where `B = QR` and `P` spans the
//!   orthogonal complement of `range(B)`.
//!
//! `‖K‖ = (γ−1)/(γ+1)`, and the eigenvalues of `K` fall into one of three
//! enclosure regimes depending on where `γ` sits relative to `κ` and `2κ`.

use nalgebra::{Cholesky, DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaddleError};
use crate::linalg::{cond2, full_qr, singular_extremes, spectral_norm, symmetrize};
use crate::precond::{assemble_precond_explicit, guard, lower_factor};
use crate::problem::{assemble_kkt, SaddleProblem};

/// Slack applied to every enclosure inequality.
pub const ENCLOSURE_SLACK: f64 = 1e-7;
/// Eigenvector matrices with a larger condition number are treated as singular.
pub const KAPPA_X_LIMIT: f64 = 1e12;

/// Extreme eigenvalues of `D̃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtildeExtremes {
    pub m: f64,
    pub ell: f64,
    pub kappa: f64,
}

impl DtildeExtremes {
    /// The classical optimal ADMM parameter `√(mℓ)`.
    pub fn optimal_beta(&self) -> f64 {
        (self.m * self.ell).sqrt()
    }

    pub fn gamma(&self, beta: f64) -> f64 {
        gamma(beta, self.m, self.ell)
    }
}

pub fn gamma(beta: f64, m: f64, ell: f64) -> f64 {
    (beta / m).max(ell / beta)
}

/// `A D⁻¹ Aᵀ`, symmetrized.
fn a_dinv_at(problem: &SaddleProblem) -> Result<DMatrix<f64>> {
    let chol = Cholesky::new(problem.d().clone()).ok_or(SaddleError::Factorization {
        block: "D",
        condition: Some(cond2(problem.d())),
    })?;
    let a = problem.a();
    let x = chol.solve(&a.transpose());
    Ok(symmetrize(&(a * x)))
}

pub fn dtilde_extremes(problem: &SaddleProblem) -> Result<DtildeExtremes> {
    let s = a_dinv_at(problem)?;
    let eig = s.symmetric_eigen();
    let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) || !hi.is_finite() {
        return Err(SaddleError::Numerical(format!(
            "A D^-1 A' is not positive definite (eigenvalues in [{lo:e}, {hi:e}])"
        )));
    }
    let m = 1.0 / hi;
    let ell = 1.0 / lo;
    Ok(DtildeExtremes {
        m,
        ell,
        kappa: (ell / m).max(1.0),
    })
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(SaddleError::Parameter(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    Ok(())
}

/// The `N` in `G = L⁻¹N`: `[0 −βAᵀB −Aᵀ; 0 0 −Bᵀ; 0 0 −I/β]`.
fn upper_factor(problem: &SaddleProblem, beta: f64) -> DMatrix<f64> {
    let (nx, nz, ny) = (problem.nx(), problem.nz(), problem.ny());
    let (a, b) = (problem.a(), problem.b());
    let n = nx + nz + ny;
    let mut m = DMatrix::zeros(n, n);
    m.view_mut((0, nx), (nx, nz)).copy_from(&(a.tr_mul(b) * -beta));
    m.view_mut((0, nx + nz), (nx, ny)).copy_from(&(a.transpose() * -1.0));
    m.view_mut((nx, nx + nz), (nz, ny)).copy_from(&(b.transpose() * -1.0));
    m.view_mut((nx + nz, nx + nz), (ny, ny))
        .copy_from(&(DMatrix::<f64>::identity(ny, ny) * (-1.0 / beta)));
    m
}

/// Dense `G(β)` such that one ADMM sweep is `u ↦ G u + b`.
pub fn build_iteration_matrix(problem: &SaddleProblem, beta: f64) -> Result<DMatrix<f64>> {
    check_beta(beta)?;
    guard(problem.dim())?;
    let l = lower_factor(problem, beta)?;
    let n = upper_factor(problem, beta);
    l.lu().solve(&n).ok_or(SaddleError::Factorization {
        block: "block lower factor",
        condition: None,
    })
}

/// QR pieces of `B` and the orthogonal / scaling matrices of the
/// block-Schur form of `G`.
#[derive(Debug, Clone)]
pub struct SchurPieces {
    /// `ny × nz`, orthonormal columns spanning `range(B)`.
    pub q: DMatrix<f64>,
    /// `ny × (ny−nz)`, orthonormal complement of `Q`.
    pub p: DMatrix<f64>,
    /// `nz × nz` upper triangular with `B = QR`.
    pub r: DMatrix<f64>,
    /// `blkdiag(I_nx, I_nz, [P Q])`.
    pub u: DMatrix<f64>,
    /// `blkdiag(βI_nx, βR, I_{ny−nz}, I_nz)`.
    pub s: DMatrix<f64>,
}

pub fn schur_pieces(problem: &SaddleProblem, beta: f64) -> Result<SchurPieces> {
    check_beta(beta)?;
    let (nx, nz, ny) = (problem.nx(), problem.nz(), problem.ny());
    let (qfull, r) = full_qr(problem.b());
    let q = qfull.columns(0, nz).into_owned();
    let p = qfull.columns(nz, ny - nz).into_owned();
    let n = nx + nz + ny;

    let mut u = DMatrix::zeros(n, n);
    u.view_mut((0, 0), (nx + nz, nx + nz))
        .copy_from(&DMatrix::<f64>::identity(nx + nz, nx + nz));
    u.view_mut((nx + nz, nx + nz), (ny, ny - nz)).copy_from(&p);
    u.view_mut((nx + nz, nx + ny), (ny, nz)).copy_from(&q);

    let mut s = DMatrix::identity(n, n);
    s.view_mut((0, 0), (nx, nx))
        .copy_from(&(DMatrix::<f64>::identity(nx, nx) * beta));
    s.view_mut((nx, nx), (nz, nz)).copy_from(&(&r * beta));

    Ok(SchurPieces { q, p, r, u, s })
}

impl SchurPieces {
    /// `S⁻¹`, using the triangular structure of `R`.
    pub fn s_inverse(&self) -> Result<DMatrix<f64>> {
        let nz = self.r.nrows();
        let n = self.s.nrows();
        let beta = self.s[(0, 0)];
        let nx = n - nz - self.q.nrows();
        let rinv = self
            .r
            .solve_upper_triangular(&DMatrix::identity(nz, nz))
            .ok_or(SaddleError::Factorization {
                block: "R",
                condition: None,
            })?;
        let mut out = DMatrix::identity(n, n);
        out.view_mut((0, 0), (nx, nx))
            .copy_from(&(DMatrix::<f64>::identity(nx, nx) / beta));
        out.view_mut((nx, nx), (nz, nz)).copy_from(&(rinv / beta));
        Ok(out)
    }

    /// `‖S‖·‖S⁻¹‖`, from the block-diagonal structure.
    pub fn s_condition(&self) -> f64 {
        let beta = self.s[(0, 0)];
        let (rmax, rmin) = singular_extremes(&self.r);
        let norm = beta.max(beta * rmax).max(1.0);
        let inv = (1.0 / beta).max(1.0 / (beta * rmin)).max(1.0);
        norm * inv
    }
}

/// `S Uᵀ G U S⁻¹`. Its first `nx` columns and last `nz` rows vanish.
pub fn block_schur_form(problem: &SaddleProblem, beta: f64) -> Result<DMatrix<f64>> {
    let g = build_iteration_matrix(problem, beta)?;
    let pieces = schur_pieces(problem, beta)?;
    let sinv = pieces.s_inverse()?;
    Ok(&pieces.s * pieces.u.transpose() * g * &pieces.u * sinv)
}

/// `K(β)` together with its blocks `K = [X Z; −Zᵀ Y]`.
#[derive(Debug, Clone)]
pub struct KMatrix {
    pub k: DMatrix<f64>,
    /// `QᵀK̃Q`, `nz × nz`.
    pub x: DMatrix<f64>,
    /// `−PᵀK̃P`, `(ny−nz) × (ny−nz)`.
    pub y: DMatrix<f64>,
    /// `QᵀK̃P`, `nz × (ny−nz)`.
    pub z: DMatrix<f64>,
    /// `K̃ = (D̃/β + I)⁻¹ − (βD̃⁻¹ + I)⁻¹`.
    pub ktilde: DMatrix<f64>,
}

fn inverse(m: DMatrix<f64>, block: &'static str) -> Result<DMatrix<f64>> {
    m.lu().try_inverse().ok_or(SaddleError::Factorization {
        block,
        condition: None,
    })
}

pub fn build_k_matrix(problem: &SaddleProblem, beta: f64) -> Result<KMatrix> {
    check_beta(beta)?;
    let (nz, ny) = (problem.nz(), problem.ny());
    let dtinv = a_dinv_at(problem)?;
    let dt = symmetrize(&inverse(dtinv.clone(), "A D^-1 A'")?);
    let id = DMatrix::<f64>::identity(ny, ny);
    let first = inverse(&dt / beta + &id, "D~/beta + I")?;
    let second = inverse(&dtinv * beta + &id, "beta D~^-1 + I")?;
    let ktilde = symmetrize(&(first - second));

    let (qfull, _) = full_qr(problem.b());
    let q = qfull.columns(0, nz);
    let p = qfull.columns(nz, ny - nz);
    let x = q.transpose() * &ktilde * q;
    let z = q.transpose() * &ktilde * p;
    let y = -(p.transpose() * &ktilde * p);

    let mut k = DMatrix::zeros(ny, ny);
    k.view_mut((0, 0), (nz, nz)).copy_from(&x);
    k.view_mut((0, nz), (nz, ny - nz)).copy_from(&z);
    k.view_mut((nz, 0), (ny - nz, nz)).copy_from(&(-z.transpose()));
    k.view_mut((nz, nz), (ny - nz, ny - nz)).copy_from(&y);
    Ok(KMatrix {
        k,
        x,
        y,
        z,
        ktilde,
    })
}

/// `J = blkdiag(I_nz, −I_{ny−nz})`.
pub fn j_matrix(nz: usize, ny: usize) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_fn(ny, |i, _| if i < nz { 1.0 } else { -1.0 }))
}

/// Eigenvalues of a dense real matrix via the real Schur form.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or(SaddleError::Eigensolver("real Schur iteration did not converge"))?;
    let eig: Vec<Complex64> = schur.complex_eigenvalues().iter().cloned().collect();
    if eig.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(SaddleError::Eigensolver("non-finite eigenvalue"));
    }
    Ok(eig)
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Tolerance on `|Im λ|` below which an eigenvalue of `K` counts as real.
pub fn real_tolerance(k_norm: f64) -> f64 {
    (1e-8 * k_norm).max(64.0 * f64::EPSILON)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `γ ∈ [√κ, κ]`: real eigenvalues in `[−‖K‖, ‖K‖]`, complex ones in a disk.
    DiskAndInterval,
    /// `γ ∈ (κ, 2κ]`: all real in `[−‖K‖, ‖K‖]`.
    SingleInterval,
    /// `γ > 2κ`: all real with modulus in `[(γ−2κ)/(γ+κ), (γ−1)/(γ+1)]`.
    TwoIntervals,
}

impl Regime {
    pub fn classify(gamma: f64, kappa: f64) -> Regime {
        if gamma <= kappa {
            Regime::DiskAndInterval
        } else if gamma <= 2.0 * kappa {
            Regime::SingleInterval
        } else {
            Regime::TwoIntervals
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::DiskAndInterval => "disk_and_interval",
            Regime::SingleInterval => "single_interval",
            Regime::TwoIntervals => "two_intervals",
        }
    }
}

/// Radius of the complex disk in the `DiskAndInterval` regime.
pub fn disk_radius(gamma: f64, kappa: f64) -> f64 {
    kappa / (gamma + kappa) - 1.0 / (gamma + 1.0)
}

/// `(low, high)` moduli of the two real clusters when `γ > 2κ`.
pub fn two_interval_endpoints(gamma: f64, kappa: f64) -> (f64, f64) {
    ((gamma - 2.0 * kappa) / (gamma + kappa), (gamma - 1.0) / (gamma + 1.0))
}

/// Checks every eigenvalue against the enclosure of `regime`.
pub fn verify_enclosure(
    regime: Regime,
    eigs: &[Complex64],
    gamma: f64,
    kappa: f64,
    nz: usize,
    ny: usize,
) -> bool {
    let k_norm = (gamma - 1.0) / (gamma + 1.0);
    let im_tol = real_tolerance(k_norm);
    let is_real = |z: &Complex64| z.im.abs() <= im_tol;
    match regime {
        Regime::DiskAndInterval => {
            let radius = disk_radius(gamma, kappa);
            eigs.iter().all(|z| {
                if is_real(z) {
                    z.re.abs() <= k_norm + ENCLOSURE_SLACK
                } else {
                    z.norm() <= radius + ENCLOSURE_SLACK
                }
            })
        }
        Regime::SingleInterval => eigs
            .iter()
            .all(|z| is_real(z) && z.re.abs() <= k_norm + ENCLOSURE_SLACK),
        Regime::TwoIntervals => {
            let (lo, hi) = two_interval_endpoints(gamma, kappa);
            let inside = eigs.iter().all(|z| {
                is_real(z)
                    && z.re.abs() >= lo - ENCLOSURE_SLACK
                    && z.re.abs() <= hi + ENCLOSURE_SLACK
            });
            let populated = if nz > 0 && nz < ny {
                eigs.iter().any(|z| z.re > 0.0) && eigs.iter().any(|z| z.re < 0.0)
            } else {
                true
            };
            inside && populated
        }
    }
}

/// `min_η ‖K + ηJ‖` over `η ∈ [−1, 1]`: a grid of spacing `step` followed
/// by golden-section refinement around the best grid point.
pub fn complex_disk_radius(k: &DMatrix<f64>, nz: usize, step: f64) -> f64 {
    let j = j_matrix(nz, k.nrows());
    let f = |eta: f64| spectral_norm(&(k + &j * eta));
    let n = ((2.0 / step).round() as usize).max(2);
    let mut best = (0.0, f64::INFINITY);
    for i in 0..=n {
        let eta = -1.0 + 2.0 * i as f64 / n as f64;
        let v = f(eta);
        if v < best.1 {
            best = (eta, v);
        }
    }
    let h = 2.0 / n as f64;
    let (mut lo, mut hi) = ((best.0 - h).max(-1.0), (best.0 + h).min(1.0));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..40 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    best.1.min(f(0.5 * (lo + hi)))
}

fn complex_qr_orthonormalize(v: DMatrix<Complex64>) -> DMatrix<Complex64> {
    v.qr().q()
}

/// Condition number of a unit-column eigenvector matrix of `k`, by block
/// inverse iteration over clusters of (numerically) equal eigenvalues.
/// Returns `None` when the matrix is numerically singular.
pub fn eigenvector_condition(k: &DMatrix<f64>, eigs: &[Complex64]) -> Option<f64> {
    let n = k.nrows();
    if n == 0 || eigs.len() != n {
        return None;
    }
    let kc: DMatrix<Complex64> = k.map(|v| Complex64::new(v, 0.0));
    let knorm = k.norm();
    let mut assigned = vec![false; n];
    let mut columns: Vec<DVector<Complex64>> = Vec::with_capacity(n);
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let group: Vec<usize> = (i..n)
            .filter(|&j| !assigned[j] && (eigs[j] - eigs[i]).norm() <= 1e-8 * (1.0 + eigs[i].norm()))
            .collect();
        for &j in &group {
            assigned[j] = true;
        }
        let g = group.len();
        let center = group.iter().map(|&j| eigs[j]).sum::<Complex64>() / g as f64;
        let shift = center + Complex64::new(1.0, 1.0) * (1e-10 * (1.0 + center.norm()));
        let shifted = &kc - DMatrix::<Complex64>::identity(n, n) * shift;
        let lu = shifted.lu();
        let mut v = DMatrix::<Complex64>::from_fn(n, g, |r, c| {
            let t = ((r * 7919 + c * 104_729 + i * 31) % 1009) as f64 / 1009.0;
            Complex64::new(t - 0.5, 0.25 * (t * 3.0).sin())
        });
        for _ in 0..4 {
            v = lu.solve(&v)?;
            if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return None;
            }
            v = complex_qr_orthonormalize(v);
        }
        // A cluster whose basis is not annihilated by K − λI is defective.
        let resid = (&kc * &v - &v * center).norm();
        if resid > 1e-6 * knorm + 1e-13 {
            return None;
        }
        for c in 0..g {
            columns.push(v.column(c).into_owned());
        }
    }
    let x = DMatrix::from_columns(&columns);
    let sv = x.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = max / min;
    (cond.is_finite() && cond <= KAPPA_X_LIMIT).then_some(cond)
}

/// `√κ(H)` for the definite `H = ±JK`, available when `β > ℓ` or `β < m`.
pub fn definite_eigenvector_condition(kmat: &KMatrix, nz: usize, beta: f64, dt: &DtildeExtremes) -> Option<f64> {
    let sign = if beta > dt.ell {
        1.0
    } else if beta < dt.m {
        -1.0
    } else {
        return None;
    };
    let ny = kmat.k.nrows();
    let h = symmetrize(&(j_matrix(nz, ny) * &kmat.k * sign));
    let eig = h.symmetric_eigen();
    let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) {
        return None;
    }
    let cond = (hi / lo).sqrt();
    (cond <= KAPPA_X_LIMIT).then_some(cond)
}

/// The constants that multiply the polynomial-approximation rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditioningFactors {
    pub c1: f64,
    #[serde(rename = "kappa_P")]
    pub kappa_p: f64,
    #[serde(rename = "kappa_X")]
    pub kappa_x: Option<f64>,
    #[serde(rename = "kappa_M")]
    pub kappa_m: f64,
}

pub fn conditioning_factors(problem: &SaddleProblem, beta: f64) -> Result<ConditioningFactors> {
    check_beta(beta)?;
    guard(problem.dim())?;
    let dt = dtilde_extremes(problem)?;
    let g = build_iteration_matrix(problem, beta)?;
    let pieces = schur_pieces(problem, beta)?;
    let gnorm = spectral_norm(&g);
    let c1 = pieces.s_condition() * gnorm * gnorm;
    let kappa_p = cond2(&assemble_precond_explicit(problem, beta)?);
    let kappa_m = cond2(&assemble_kkt(problem).m);
    let kmat = build_k_matrix(problem, beta)?;
    let eigs = eigenvalues(&kmat.k)?;
    let kappa_x = min_option(
        eigenvector_condition(&kmat.k, &eigs),
        definite_eigenvector_condition(&kmat, problem.nz(), beta, &dt),
    );
    Ok(ConditioningFactors {
        c1,
        kappa_p,
        kappa_x,
        kappa_m,
    })
}

fn min_option(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub beta: f64,
    pub m: f64,
    pub ell: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub k_norm: f64,
    pub eigenvalues: Vec<Complex64>,
    pub regime: Regime,
    pub enclosure_ok: bool,
    pub c1: f64,
    #[serde(rename = "kappa_P")]
    pub kappa_p: f64,
    #[serde(rename = "kappa_X")]
    pub kappa_x: Option<f64>,
    #[serde(rename = "kappa_M")]
    pub kappa_m: f64,
}

impl SpectralReport {
    pub fn factors(&self) -> ConditioningFactors {
        ConditioningFactors {
            c1: self.c1,
            kappa_p: self.kappa_p,
            kappa_x: self.kappa_x,
            kappa_m: self.kappa_m,
        }
    }
}

/// Builds `K(β)`, computes its spectrum, classifies the regime, checks the
/// corresponding enclosure and attaches the conditioning factors.
pub fn classify_and_verify(problem: &SaddleProblem, beta: f64) -> Result<SpectralReport> {
    check_beta(beta)?;
    guard(problem.dim())?;
    let dt = dtilde_extremes(problem)?;
    let gamma = dt.gamma(beta);
    let kmat = build_k_matrix(problem, beta)?;
    let k_norm = spectral_norm(&kmat.k);
    let eigs = eigenvalues(&kmat.k)?;
    let regime = Regime::classify(gamma, dt.kappa);
    let enclosure_ok = verify_enclosure(regime, &eigs, gamma, dt.kappa, problem.nz(), problem.ny());
    let factors = conditioning_factors(problem, beta)?;
    Ok(SpectralReport {
        beta,
        m: dt.m,
        ell: dt.ell,
        kappa: dt.kappa,
        gamma,
        k_norm,
        eigenvalues: eigs,
        regime,
        enclosure_ok,
        c1: factors.c1,
        kappa_p: factors.kappa_p,
        kappa_x: factors.kappa_x,
        kappa_m: factors.kappa_m,
    })
}
