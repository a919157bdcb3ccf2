//! Small dense linear-algebra helpers shared by the solver and analysis modules.

use nalgebra::{DMatrix, DVector};

/// Largest and smallest singular values. Empty matrices report `(0, 0)`.
pub fn singular_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    if m.is_empty() {
        return (0.0, 0.0);
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (max, min)
}

/// Spectral (induced 2-) norm.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_extremes(m).0
}

/// 2-norm condition number, `inf` when the matrix is numerically singular.
pub fn cond2(m: &DMatrix<f64>) -> f64 {
    let (max, min) = singular_extremes(m);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Extreme eigenvalues `(min, max)` of a symmetric matrix.
pub fn sym_eigen_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest entrywise deviation from symmetry relative to the largest entry.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).amax() / scale
}

/// Full Householder QR of a tall matrix `b` (rows ≥ cols).
///
/// Returns the complete square orthogonal factor (its leading `cols`
/// columns span the range of `b`) and the square upper-triangular `R`.
pub fn full_qr(b: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (rows, cols) = b.shape();
    let qr = b.clone().qr();
    let mut qt = DMatrix::<f64>::identity(rows, rows);
    qr.q_tr_mul(&mut qt);
    let r = qr.r().rows(0, cols).into_owned();
    (qt.transpose(), r)
}

/// `‖a − b‖ / max(‖b‖, tiny)` in the Euclidean norm.
pub fn rel_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let denom = b.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}

/// Frobenius-relative difference between two matrices.
pub fn rel_diff_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = b.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}
