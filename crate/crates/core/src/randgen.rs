//! Seeded random problem generator and parameter sampler.
//!
//! Every random component draws from its own ChaCha20 stream, keyed by the
//! 64-bit seed and a fixed per-component stream id, so a component's values do
//! not depend on the order in which the others are drawn.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaddleError};
use crate::problem::{Provenance, SaddleProblem};

/// Stream ids for the independent random components.
mod stream {
    pub const U_A: u64 = 1;
    pub const V_A: u64 = 2;
    pub const U_B: u64 = 3;
    pub const V_B: u64 = 4;
    pub const U_D: u64 = 5;
    pub const SIGMA_A: u64 = 6;
    pub const SIGMA_B: u64 = 7;
    pub const SIGMA_D: u64 = 8;
    pub const RX: u64 = 9;
    pub const RZ: u64 = 10;
    pub const RY: u64 = 11;
    pub const BETA: u64 = 12;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub s: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nz < 1 || self.nz > self.ny || self.ny > self.nx {
            return Err(SaddleError::InvalidProblem(format!(
                "dimensions must satisfy 1 <= nz <= ny <= nx, got nx = {}, ny = {}, nz = {}",
                self.nx, self.ny, self.nz
            )));
        }
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return Err(SaddleError::Parameter(format!(
                "log-standard-deviation s must be finite and nonnegative, got {}",
                self.s
            )));
        }
        Ok(())
    }
}

/// A ChaCha20 generator on stream `id` of `seed`.
pub fn component_rng(seed: u64, id: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normal_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // Column-major fill keeps the draw order identical to nalgebra's storage.
    DMatrix::from_iterator(rows, cols, (0..rows * cols).map(|_| StandardNormal.sample(rng)))
}

fn normal_vector(rng: &mut ChaCha20Rng, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

/// Haar-distributed `n × n` orthogonal matrix: QR of a Gaussian matrix with
/// the columns of `Q` flipped so that `R` has a positive diagonal.
pub fn haar_orthogonal(rng: &mut ChaCha20Rng, n: usize) -> DMatrix<f64> {
    let g = normal_matrix(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn log_normal(rng: &mut ChaCha20Rng, n: usize, s: f64) -> DVector<f64> {
    normal_vector(rng, n).map(|g| (s * g).exp())
}

/// Random problem with Haar orthogonal factors and log-normal singular values.
///
/// * `A = U_A diag(σ_A) V_A[:, :ny]ᵀ` with `ny` values,
/// * `B = U_B[:, :nz] diag(σ_B) V_Bᵀ` with `nz` values,
/// * `D = U_D diag(σ_D) U_Dᵀ` with `nx` values,
/// * `r_x, r_z, r_y` standard normal.
pub fn random_problem(spec: &GenSpec) -> Result<SaddleProblem> {
    spec.validate()?;
    let GenSpec { nx, ny, nz, s, seed } = *spec;
    let rng = |id| component_rng(seed, id);

    let u_a = haar_orthogonal(&mut rng(stream::U_A), ny);
    let v_a = haar_orthogonal(&mut rng(stream::V_A), nx);
    let u_b = haar_orthogonal(&mut rng(stream::U_B), ny);
    let v_b = haar_orthogonal(&mut rng(stream::V_B), nz);
    let u_d = haar_orthogonal(&mut rng(stream::U_D), nx);
    let sigma_a = log_normal(&mut rng(stream::SIGMA_A), ny, s);
    let sigma_b = log_normal(&mut rng(stream::SIGMA_B), nz, s);
    let sigma_d = log_normal(&mut rng(stream::SIGMA_D), nx, s);

    let a = &u_a * DMatrix::from_diagonal(&sigma_a) * v_a.columns(0, ny).transpose();
    let b = u_b.columns(0, nz) * DMatrix::from_diagonal(&sigma_b) * v_b.transpose();
    let d = &u_d * DMatrix::from_diagonal(&sigma_d) * u_d.transpose();
    let d = (&d + d.transpose()) * 0.5;

    let rx = normal_vector(&mut rng(stream::RX), nx);
    let rz = normal_vector(&mut rng(stream::RZ), nz);
    let ry = normal_vector(&mut rng(stream::RY), ny);

    Ok(SaddleProblem::new(a, b, d, rx, rz, ry)?.with_provenance(Provenance { nx, ny, nz, s, seed }))
}

/// `β = 10^{2Y}` with `Y ~ Uniform[−1, 1]`, so `log₁₀β` is uniform on `[−2, 2]`.
pub fn sample_beta(seed: u64) -> f64 {
    let y: f64 = component_rng(seed, stream::BETA).random_range(-1.0..=1.0);
    beta_from_uniform(y)
}

pub fn beta_from_uniform(y: f64) -> f64 {
    10f64.powf(2.0 * y)
}
