//! Full (unrestarted) GMRES and the ADMM-preconditioned drivers.
//!
//! Arnoldi uses modified Gram–Schmidt with one reorthogonalization pass; the
//! Hessenberg least-squares problem is kept triangular with Givens
//! rotations, so the inner residual is available at every step for free.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::admm::{check_solve_params, residual_converged, AdmmEngine, IterationTrace, MethodTag, Solve};
use crate::error::{Result, SaddleError};
use crate::precond::PrecondOperator;
use crate::problem::{kkt_residual_unchecked, Iterate};

/// A square linear map given only by its action.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, v: &DVector<f64>) -> DVector<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        assert!(self.is_square(), "operator matrix must be square");
        self.nrows()
    }
    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self * v
    }
}

/// Wraps a closure as a [`LinearOperator`].
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F> FnOperator<F>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnOperator { dim, f }
    }
}

impl<F> LinearOperator for FnOperator<F>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        (self.f)(v)
    }
}

#[derive(Debug, Clone)]
pub struct GmresResult {
    pub solution: DVector<f64>,
    /// `‖rhs − op·x_k‖` for k = 0, 1, …; non-increasing.
    pub inner_residuals: Vec<f64>,
    pub iterations: usize,
    /// Happy breakdown: the Krylov space became invariant and the iterate is exact.
    pub breakdown: bool,
    pub converged: bool,
}

/// Called after every GMRES iteration with `(k, x_k, inner residual)`.
/// Returning `Ok(true)` stops the iteration.
pub type Monitor<'m> = dyn FnMut(usize, &DVector<f64>, f64) -> Result<bool> + 'm;

/// Runs GMRES until the relative inner residual drops to `tol`, a happy
/// breakdown occurs, or `max_iter` (clamped to `op.dim()`) is reached.
pub fn gmres(
    op: &dyn LinearOperator,
    rhs: &DVector<f64>,
    x0: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<GmresResult> {
    run(op, rhs, x0, tol, max_iter, None)
}

/// [`gmres`] with a per-iteration callback that sees the current iterate.
pub fn gmres_monitored(
    op: &dyn LinearOperator,
    rhs: &DVector<f64>,
    x0: &DVector<f64>,
    tol: f64,
    max_iter: usize,
    monitor: &mut Monitor<'_>,
) -> Result<GmresResult> {
    run(op, rhs, x0, tol, max_iter, Some(monitor))
}

fn run(
    op: &dyn LinearOperator,
    rhs: &DVector<f64>,
    x0: &DVector<f64>,
    tol: f64,
    max_iter: usize,
    mut monitor: Option<&mut Monitor<'_>>,
) -> Result<GmresResult> {
    let n = op.dim();
    if rhs.len() != n {
        return Err(SaddleError::Dimension {
            block: "rhs",
            expected: n,
            got: rhs.len(),
        });
    }
    if x0.len() != n {
        return Err(SaddleError::Dimension {
            block: "x0",
            expected: n,
            got: x0.len(),
        });
    }
    if !(tol > 0.0) {
        return Err(SaddleError::Parameter(format!("tol must be positive, got {tol}")));
    }
    let max_iter = max_iter.min(n);

    let r0 = rhs - op.apply(x0);
    let beta0 = r0.norm();
    if !beta0.is_finite() {
        return Err(SaddleError::Numerical("non-finite initial residual".into()));
    }
    let mut inner = vec![beta0];
    if beta0 == 0.0 || max_iter == 0 {
        return Ok(GmresResult {
            solution: x0.clone(),
            inner_residuals: inner,
            iterations: 0,
            breakdown: false,
            converged: beta0 == 0.0,
        });
    }

    let mut basis: Vec<DVector<f64>> = vec![r0 / beta0];
    // Columns of the rotated (upper-triangular) Hessenberg factor.
    let mut rcols: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g: Vec<f64> = vec![beta0];

    for j in 0..max_iter {
        let mut w = op.apply(&basis[j]);
        let wnorm = w.norm();
        if !wnorm.is_finite() {
            return Err(SaddleError::Numerical(format!(
                "non-finite operator output at GMRES iteration {}",
                j + 1
            )));
        }
        let mut h = vec![0.0; j + 2];
        for _pass in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let c = v.dot(&w);
                h[i] += c;
                w.axpy(-c, v, 1.0);
            }
        }
        let hnext = w.norm();
        h[j + 1] = hnext;
        let breakdown = hnext <= 1e-14 * wnorm;

        for i in 0..j {
            let (a, b) = (h[i], h[i + 1]);
            h[i] = cs[i] * a + sn[i] * b;
            h[i + 1] = -sn[i] * a + cs[i] * b;
        }
        let denom = h[j].hypot(h[j + 1]);
        if denom == 0.0 {
            return Err(SaddleError::Numerical(format!(
                "singular Hessenberg column at GMRES iteration {}",
                j + 1
            )));
        }
        let (c, s) = (h[j] / denom, h[j + 1] / denom);
        cs.push(c);
        sn.push(s);
        h[j] = denom;
        h.truncate(j + 1);
        rcols.push(h);
        let gj = g[j];
        g[j] = c * gj;
        g.push(-s * gj);

        let res = g[j + 1].abs();
        inner.push(res);
        let k = j + 1;
        let converged = res <= tol * beta0 || breakdown;
        let mut stop = converged || k == max_iter;

        if monitor.is_some() || stop {
            let x = assemble_iterate(x0, &basis, &rcols, &g);
            if let Some(m) = monitor.as_mut() {
                if m(k, &x, res)? {
                    stop = true;
                }
            }
            if stop {
                return Ok(GmresResult {
                    solution: x,
                    inner_residuals: inner,
                    iterations: k,
                    breakdown,
                    converged,
                });
            }
        }
        basis.push(w / hnext);
    }
    unreachable!("loop always returns at k == max_iter")
}

/// `x0 + V_k y_k` with `R_k y_k = g_k` solved by back substitution.
fn assemble_iterate(
    x0: &DVector<f64>,
    basis: &[DVector<f64>],
    rcols: &[Vec<f64>],
    g: &[f64],
) -> DVector<f64> {
    let k = rcols.len();
    let mut y = g[..k].to_vec();
    for i in (0..k).rev() {
        let mut acc = y[i];
        for (j, col) in rcols.iter().enumerate().skip(i + 1) {
            acc -= col[i] * y[j];
        }
        y[i] = acc / rcols[i][i];
    }
    let mut x = x0.clone();
    for (yi, v) in y.iter().zip(basis) {
        x.axpy(*yi, v, 1.0);
    }
    x
}

/// Which side of `M` the ADMM preconditioner is applied on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn method_tag(self) -> MethodTag {
        match self {
            Side::Left => MethodTag::AdmmGmresLeft,
            Side::Right => MethodTag::AdmmGmresRight,
        }
    }
}

/// ADMM-preconditioned GMRES on the KKT system.
///
/// * `Left` runs GMRES on `P⁻¹M u = P⁻¹r` from `u0`.
/// * `Right` runs GMRES on `M P⁻¹ û = r` from `û0 = P u0` and recovers
///   `u = P⁻¹ û`.
///
/// The trace holds the true KKT residual of the reconstructed iterate at
/// every GMRES iteration. The inner tolerance is `epsilon / 10`; the loop
/// also stops as soon as the true residual meets `epsilon`.
pub fn admm_gmres_solve(
    engine: &AdmmEngine<'_>,
    side: Side,
    u0: &Iterate,
    epsilon: f64,
    max_iter: usize,
) -> Result<Solve> {
    check_solve_params(epsilon, max_iter)?;
    let p = engine.problem();
    p.check_iterate(u0)?;
    let (nx, nz, ny) = (p.nx(), p.nz(), p.ny());
    let dim = p.dim();

    let res0 = kkt_residual_unchecked(p, u0);
    if !res0.is_finite() {
        return Err(SaddleError::Divergence { last_finite: 0 });
    }
    let mut residuals = vec![res0];
    let mut last = u0.clone();
    let mut converged = residual_converged(res0, res0, epsilon, p.residual_floor(u0));

    if !converged {
        let precond = PrecondOperator::new(engine);
        let r = p.rhs().stack();
        let inner_tol = epsilon / 10.0;

        let mut record = |u: Iterate| -> Result<bool> {
            let res = kkt_residual_unchecked(p, &u);
            if !res.is_finite() {
                return Err(SaddleError::Divergence {
                    last_finite: residuals.len() - 1,
                });
            }
            residuals.push(res);
            let done = residual_converged(res, res0, epsilon, p.residual_floor(&u));
            last = u;
            Ok(done)
        };

        match side {
            Side::Left => {
                let op = FnOperator::new(dim, |v: &DVector<f64>| {
                    precond.apply_inverse_unchecked(&p.apply_kkt_stacked(v))
                });
                let rhs = precond.apply_inverse_unchecked(&r);
                let mut monitor = |_k: usize, x: &DVector<f64>, _res: f64| {
                    record(Iterate::from_stacked(x, nx, nz, ny))
                };
                gmres_monitored(&op, &rhs, &u0.stack(), inner_tol, max_iter, &mut monitor)?;
            }
            Side::Right => {
                let op = FnOperator::new(dim, |v: &DVector<f64>| {
                    p.apply_kkt_stacked(&precond.apply_inverse_unchecked(v))
                });
                let x0 = precond.apply_unchecked(&u0.stack());
                let mut monitor = |_k: usize, x: &DVector<f64>, _res: f64| {
                    let u = precond.apply_inverse_unchecked(x);
                    record(Iterate::from_stacked(&u, nx, nz, ny))
                };
                gmres_monitored(&op, &r, &x0, inner_tol, max_iter, &mut monitor)?;
            }
        }
        let res = *residuals.last().expect("non-empty");
        converged = residual_converged(res, res0, epsilon, p.residual_floor(&last));
    }

    let iterations = residuals.len() - 1;
    Ok(Solve {
        trace: IterationTrace {
            residuals,
            iterations,
            converged,
            epsilon,
            method_tag: side.method_tag(),
            beta: engine.beta(),
        },
        solution: last,
    })
}
