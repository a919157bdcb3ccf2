#![allow(dead_code)]

use saddle::{random_problem, DMatrix, DVector, GenSpec, SaddleProblem};

pub fn problem(nx: usize, ny: usize, nz: usize, s: f64, seed: u64) -> SaddleProblem {
    random_problem(&GenSpec { nx, ny, nz, s, seed }).expect("valid spec")
}

/// The standard small instance used across the suite.
pub fn seeded(seed: u64) -> SaddleProblem {
    problem(6, 4, 2, 0.5, seed)
}

/// Problem with `A = I`, diagonal `D` and a fixed well-conditioned `B`.
pub fn identity_a(d: &[f64], nz: usize) -> SaddleProblem {
    let n = d.len();
    let mut b = DMatrix::zeros(n, nz);
    for j in 0..nz {
        b[(j, j)] = 1.0;
        b[((j + 1) % n, j)] = 0.3;
    }
    SaddleProblem::new(
        DMatrix::identity(n, n),
        b,
        DMatrix::from_diagonal(&DVector::from_row_slice(d)),
        DVector::from_element(n, 1.0),
        DVector::from_element(nz, 1.0),
        DVector::from_element(n, 1.0),
    )
    .expect("valid problem")
}

/// `count` values geometrically spaced on `[lo, hi]`, endpoints included.
pub fn geomspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// Entry-by-entry KKT matrix, written without any block views.
pub fn brute_force_kkt(p: &SaddleProblem) -> DMatrix<f64> {
    let (nx, nz, ny) = (p.nx(), p.nz(), p.ny());
    let n = nx + nz + ny;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = if i < nx && j < nx {
                p.d()[(i, j)]
            } else if i < nx && j >= nx + nz {
                p.a()[(j - nx - nz, i)]
            } else if i >= nx && i < nx + nz && j >= nx + nz {
                p.b()[(j - nx - nz, i - nx)]
            } else if i >= nx + nz && j < nx {
                p.a()[(i - nx - nz, j)]
            } else if i >= nx + nz && j >= nx && j < nx + nz {
                p.b()[(i - nx - nz, j - nx)]
            } else {
                0.0
            };
        }
    }
    m
}

/// Deterministic pseudo-random vector.
pub fn probe(n: usize, salt: u64) -> DVector<f64> {
    DVector::from_fn(n, |i, _| {
        let t = ((i as u64 + 1) * 2_654_435_761 + salt * 40_503) % 10_007;
        t as f64 / 10_007.0 - 0.5
    })
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
