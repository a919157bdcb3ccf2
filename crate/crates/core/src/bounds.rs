//! Polynomial-approximation bounds and the residual-decay curves built on them.
//!
//! All functions are closed-form and cheap. Each `*_bound` also reports the
//! degree split of the polynomial it is derived from, so callers can build
//! that polynomial and sample it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SaddleError};
use crate::spectral::ConditioningFactors;

/// `ln(1 + √2)`.
pub const C0: f64 = 0.881_373_587_019_543;
/// Lower bound on the Chebyshev share `ξ/k` of the two-interval split.
pub const TWO_INTERVAL_EXPONENT: f64 = 0.317;
/// Exponent of the intermediate-β rate.
pub const DISK_RATE_EXPONENT: f64 = 0.209;

/// Switch point between the recurrence and the closed form.
const CHEB_CROSSOVER: f64 = 1.5;

/// Chebyshev polynomial of the first kind `T_k(x)`.
pub fn cheb(k: usize, x: f64) -> f64 {
    if x.abs() <= CHEB_CROSSOVER {
        let (mut t0, mut t1) = (1.0, x);
        if k == 0 {
            return t0;
        }
        for _ in 1..k {
            let t2 = 2.0 * x * t1 - t0;
            t0 = t1;
            t1 = t2;
        }
        t1
    } else if x > 0.0 {
        let w = x + (x * x - 1.0).sqrt();
        let wk = w.powi(k as i32);
        0.5 * (wk + 1.0 / wk)
    } else {
        let v = cheb(k, -x);
        if k.is_multiple_of(2) {
            v
        } else {
            -v
        }
    }
}

/// `T_k(z)` for complex `z`, by the three-term recurrence.
pub fn cheb_complex(k: usize, z: Complex64) -> Complex64 {
    let (mut t0, mut t1) = (Complex64::new(1.0, 0.0), z);
    if k == 0 {
        return t0;
    }
    for _ in 1..k {
        let t2 = z * t1 * 2.0 - t0;
        t0 = t1;
        t1 = t2;
    }
    t1
}

/// `(√κ − 1)/(√κ + 1)`.
pub fn sqrt_rate(kappa: f64) -> f64 {
    let s = kappa.sqrt();
    (s - 1.0) / (s + 1.0)
}

/// Optimal polynomial bound over `[c−a, c+a]` under `p(1) = 1`:
/// `1/|T_k((1−c)/a)|`.
pub fn interval_bound(k: usize, c: f64, a: f64) -> Result<f64> {
    if !(a >= 0.0) || !c.is_finite() {
        return Err(SaddleError::Domain(format!(
            "interval half-width must be nonnegative, got a = {a}"
        )));
    }
    let dist = (1.0 - c).abs();
    if dist <= a {
        return Err(SaddleError::Domain(format!(
            "interval [{}, {}] contains 1",
            c - a,
            c + a
        )));
    }
    if k == 0 {
        return Ok(1.0);
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / cheb(k, dist / a).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoIntervalBound {
    pub lower: f64,
    pub upper: f64,
    /// Degree of the Chebyshev factor.
    pub xi: usize,
    /// Degree of the monomial factor.
    pub eta: usize,
}

/// `η/ξ` for intervals `±[c−a, c+a]`, with `ν = 1 + a/c`.
pub fn split_ratio(c: f64, a: f64) -> f64 {
    if a == 0.0 {
        return 1.0;
    }
    let nu = 1.0 + a / c;
    split_quotient(nu.sqrt())
}

/// `log((x−1)/(x+1)) / log((x²−1)/(x²+1))`, non-decreasing on `(1, ∞)`.
pub fn split_quotient(x: f64) -> f64 {
    let x2 = x * x;
    ((x - 1.0) / (x + 1.0)).ln() / ((x2 - 1.0) / (x2 + 1.0)).ln()
}

/// Bounds for the two mirrored intervals `I₋ = −I₊`, `I₊ = [c−a, c+a]`.
///
/// The constructive polynomial is
/// `((z+c)/(1+c))^η · T_ξ((z−c)/a) / |T_ξ((1−c)/a)|`.
///
/// Whenever the returned split balances the two intervals, its maximum is at
/// most `2q^ξ ≤ upper`. For a handful of very small `k` (1 and 4 on dense
/// grids) the Chebyshev degree floor `ξ ≥ 0.317k` leaves no balanced split and
/// `upper` can undershoot the true min-max value: at `k = 1` the best
/// polynomial is `z`, whose maximum `c + a` exceeds `2q^{0.317}` for tight
/// clusters near 1.
pub fn two_interval_bound(k: usize, c: f64, a: f64) -> Result<TwoIntervalBound> {
    if !(a >= 0.0) || !(c >= a) || !(c + a < 1.0) || (a > 0.0 && a >= c) {
        return Err(SaddleError::Domain(format!(
            "two-interval bound needs 0 <= a < c and c + a < 1, got c = {c}, a = {a}"
        )));
    }
    let kappa_plus = (1.0 - c + a) / (1.0 - c - a);
    let q = sqrt_rate(kappa_plus);
    let upper = 2.0 * q.powf(TWO_INTERVAL_EXPONENT * k as f64);
    let lower = q.powi(k as i32);

    let r = split_ratio(c, a);
    let xi_floor = (TWO_INTERVAL_EXPONENT * k as f64).ceil() as usize;
    let eta_cap = k.saturating_sub(xi_floor);
    let mut eta = ((k as f64 * r / (1.0 + r)).round() as usize).min(eta_cap);
    // Both suprema sit at the outer endpoints ±(c+a), so the balance
    // sup_{I₋} ≤ sup_{I₊} reads T_ξ(x) ≤ x^η with x = 1 + 2c/a. Rounding can
    // break it, in which case more weight moves to the monomial factor.
    if a > 0.0 {
        let x = 1.0 + 2.0 * c / a;
        while eta < eta_cap && cheb(k - eta, x) > x.powi(eta as i32) {
            eta += 1;
        }
    }
    Ok(TwoIntervalBound {
        lower,
        upper,
        xi: k - eta,
        eta,
    })
}

/// Evaluates the constructive two-interval polynomial at real `z`.
pub fn two_interval_poly(z: f64, c: f64, a: f64, eta: usize, xi: usize) -> f64 {
    let mono = ((z + c) / (1.0 + c)).powi(eta as i32);
    if xi == 0 {
        return mono;
    }
    if a == 0.0 {
        return mono * ((z - c) / (1.0 - c)).powi(xi as i32);
    }
    mono * cheb(xi, (z - c) / a) / cheb(xi, (1.0 - c) / a).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskIntervalBound {
    pub upper: f64,
    pub eta: usize,
    pub xi: usize,
}

/// Bound over the union of the disk `|z| ≤ aD` and interval `[−aI, aI]`.
///
/// The constructive polynomial is `z^η · T_ξ(z/aI) / |T_ξ(1/aI)|`.
pub fn disk_interval_bound(k: usize, a_d: f64, a_i: f64) -> Result<DiskIntervalBound> {
    if !(a_d >= 0.0) || !(a_d <= a_i) || !(a_i < 1.0) {
        return Err(SaddleError::Domain(format!(
            "disk-interval bound needs 0 <= aD <= aI < 1, got aD = {a_d}, aI = {a_i}"
        )));
    }
    let delta = if a_i == 0.0 { 1.0 } else { 1.0 - a_d / a_i };
    let eta = ((k as f64 * C0 / (delta + C0)).ceil() as usize).min(k);
    let xi = k - eta;
    let kappa_i = (1.0 + a_i) / (1.0 - a_i);
    let mono = (kappa_i - 1.0) / (kappa_i + 1.0);
    let upper = 2.0 * mono.powi(eta as i32) * sqrt_rate(kappa_i).powi(xi as i32);
    Ok(DiskIntervalBound { upper, eta, xi })
}

/// Evaluates the constructive disk-interval polynomial at complex `z`.
pub fn disk_interval_poly(z: Complex64, a_i: f64, eta: usize, xi: usize) -> Complex64 {
    let mono = z.powi(eta as i32);
    if xi == 0 || a_i == 0.0 {
        return mono;
    }
    mono * cheb_complex(xi, z / a_i) / cheb(xi, 1.0 / a_i).abs()
}

/// Upper bound on `max_{|z| = η} |T_k(z)|`, namely `T_k(√(1+η²))`.
pub fn chebyshev_disk_bound(k: usize, eta: f64) -> f64 {
    cheb(k, (1.0 + eta * eta).sqrt())
}

fn check_gamma_kappa(gamma: f64, kappa: f64) -> Result<()> {
    let tol = 1e-12 * kappa.max(1.0);
    if !(kappa >= 1.0) || !(gamma >= kappa.sqrt() - tol) || !(gamma <= kappa + tol) {
        return Err(SaddleError::Domain(format!(
            "need kappa >= 1 and sqrt(kappa) <= gamma <= kappa, got gamma = {gamma}, kappa = {kappa}"
        )));
    }
    Ok(())
}

/// Per-iteration convergence factor for intermediate `β`.
pub fn rho_factor(gamma: f64, kappa: f64) -> Result<f64> {
    check_gamma_kappa(gamma, kappa)?;
    let delta = ((gamma * gamma - kappa) / ((gamma + kappa) * (gamma + 1.0))).max(0.0);
    let g1 = ((gamma - 1.0) / (gamma + 1.0)).max(0.0);
    let w = C0 + delta;
    Ok(g1.powf(C0 / w) * sqrt_rate(gamma).max(0.0).powf(delta / w))
}

/// `(κ^{2/3}/(κ^{2/3}+1))^{0.209}`, a `γ`-free majorant of [`rho_factor`].
pub fn intermediate_rate_cap(kappa: f64) -> f64 {
    let t = kappa.powf(2.0 / 3.0);
    (t / (t + 1.0)).powf(DISK_RATE_EXPONENT)
}

/// `q(2κ)^{0.317}`, the per-iteration rate for extremal `β`.
pub fn extremal_rate(kappa: f64) -> f64 {
    sqrt_rate(2.0 * kappa).powf(TWO_INTERVAL_EXPONENT)
}

/// `κ₊` of the outer interval when `γ > 2κ`. Never exceeds `2κ`.
pub fn extremal_kappa_plus(gamma: f64, kappa: f64) -> f64 {
    3.0 * kappa * (gamma + 1.0) / (2.0 * (gamma + kappa))
}

/// Iteration estimate for plain ADMM at the optimal parameter:
/// `2 + ⌈(√κ + 1)·ln(c₁κ_M/ε)⌉`.
pub fn admm_iteration_estimate(kappa: f64, c1: f64, kappa_m: f64, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0) || !(kappa >= 1.0) || !(c1 > 0.0) || !(kappa_m > 0.0) {
        return Err(SaddleError::Domain(format!(
            "invalid estimate inputs kappa = {kappa}, c1 = {c1}, kappa_M = {kappa_m}, eps = {epsilon}"
        )));
    }
    let log = (c1 * kappa_m / epsilon).ln().max(0.0);
    Ok(2 + ((kappa.sqrt() + 1.0) * log).ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Prop5,
    Thm7,
    Thm9,
    Lemma22,
    Lemma23,
}

impl CurveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveKind::Prop5 => "prop5",
            CurveKind::Thm7 => "thm7",
            CurveKind::Thm9 => "thm9",
            CurveKind::Lemma22 => "lemma22",
            CurveKind::Lemma23 => "lemma23",
        }
    }

    pub fn parse(s: &str) -> Option<CurveKind> {
        Some(match s {
            "prop5" => CurveKind::Prop5,
            "thm7" => CurveKind::Thm7,
            "thm9" => CurveKind::Thm9,
            "lemma22" => CurveKind::Lemma22,
            "lemma23" => CurveKind::Lemma23,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    pub beta: f64,
    pub m: f64,
    pub ell: f64,
    pub c1: f64,
    #[serde(rename = "kappa_P")]
    pub kappa_p: f64,
    #[serde(rename = "kappa_X")]
    pub kappa_x: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub kind: CurveKind,
    /// `values[k]` bounds the relative residual after `k` iterations.
    pub values: Vec<f64>,
    pub params: CurveParams,
}

impl BoundCurve {
    /// Writes `k,value,kind` rows.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["k", "value", "kind"])?;
        for (k, v) in self.values.iter().enumerate() {
            wtr.write_record([k.to_string(), format!("{v:e}"), self.kind.as_str().to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Evaluates a residual bound curve for `k = 0..=k_max`.
pub fn theorem_curve(
    kind: CurveKind,
    k_max: usize,
    beta: f64,
    m: f64,
    ell: f64,
    factors: &ConditioningFactors,
    epsilon: f64,
) -> Result<BoundCurve> {
    if !(beta > 0.0) || !(m > 0.0) || !(ell >= m) {
        return Err(SaddleError::Parameter(format!(
            "need beta > 0 and 0 < m <= ell, got beta = {beta}, m = {m}, ell = {ell}"
        )));
    }
    let kappa = (ell / m).max(1.0);
    let extremal = beta > ell || beta < m;
    let params = CurveParams {
        beta,
        m,
        ell,
        c1: factors.c1,
        kappa_p: factors.kappa_p,
        kappa_x: factors.kappa_x,
    };
    let geometric = |base: f64, rate: f64| -> Vec<f64> {
        (0..=k_max).map(|k| base * rate.powi(k as i32)).collect()
    };
    let values = match kind {
        CurveKind::Prop5 => {
            let n = admm_iteration_estimate(kappa, factors.c1, factors.kappa_m, epsilon)?;
            vec![n as f64; k_max + 1]
        }
        CurveKind::Thm7 | CurveKind::Lemma22 => {
            if !extremal {
                return Err(SaddleError::Parameter(format!(
                    "{} needs beta > ell or beta < m (beta = {beta}, m = {m}, ell = {ell})",
                    kind.as_str()
                )));
            }
            let base = if kind == CurveKind::Thm7 {
                let r = (beta / ell).max(m / beta);
                2.0 * factors.c1 * factors.kappa_p * (1.0 + 1.0 / (r - 1.0))
            } else {
                2.0
            };
            geometric(base, extremal_rate(kappa))
        }
        CurveKind::Thm9 | CurveKind::Lemma23 => {
            if extremal {
                return Err(SaddleError::Parameter(format!(
                    "{} needs m <= beta <= ell (beta = {beta}, m = {m}, ell = {ell})",
                    kind.as_str()
                )));
            }
            let base = if kind == CurveKind::Thm9 {
                let kx = factors.kappa_x.ok_or_else(|| {
                    SaddleError::Parameter("thm9 needs a finite eigenvector condition number".into())
                })?;
                2.0 * factors.c1 * factors.kappa_p * kx
            } else {
                2.0
            };
            geometric(base, intermediate_rate_cap(kappa))
        }
    };
    Ok(BoundCurve {
        kind,
        values,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheb_small_values() {
        for k in 0..20 {
            assert_eq!(cheb(k, 1.0), 1.0);
        }
        assert!((cheb(3, 2.0) - 26.0).abs() <= 1e-14 * 26.0);
        assert_eq!(cheb(0, 5.0), 1.0);
        assert!((cheb(2, -3.0) - 17.0).abs() < 1e-12);
        assert!((cheb(3, -2.0) + 26.0).abs() < 1e-10);
    }

    #[test]
    fn cheb_crossover_is_continuous() {
        for k in [1usize, 5, 17, 40] {
            for i in 0..=200 {
                let x = 1.4 + 0.2 * i as f64 / 200.0;
                let w = x + (x * x - 1.0).sqrt();
                let closed = 0.5 * (w.powi(k as i32) + w.powi(-(k as i32)));
                let mut t = (1.0, x);
                for _ in 1..k {
                    t = (t.1, 2.0 * x * t.1 - t.0);
                }
                let rec = if k == 0 { 1.0 } else { t.1 };
                assert!((cheb(k, x) - closed).abs() <= 1e-12 * closed.abs());
                assert!((rec - closed).abs() <= 1e-12 * closed.abs());
            }
        }
    }

    #[test]
    fn complex_cheb_matches_real() {
        for k in 0..8 {
            let z = cheb_complex(k, Complex64::new(0.7, 0.0));
            assert!((z.re - cheb(k, 0.7)).abs() < 1e-14 && z.im == 0.0);
        }
    }

    #[test]
    fn interval_bound_examples() {
        assert!((interval_bound(1, 0.0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(interval_bound(0, 0.3, 0.2).unwrap(), 1.0);
        assert_eq!(interval_bound(4, 0.3, 0.0).unwrap(), 0.0);
        assert!(interval_bound(3, 0.9, 0.2).is_err());
    }

    #[test]
    fn two_interval_degenerate_cluster() {
        let b = two_interval_bound(5, 0.0, 0.0).unwrap();
        assert_eq!(b.upper, 0.0);
        assert_eq!(b.eta + b.xi, 5);
        assert!(two_interval_bound(3, 0.2, 0.3).is_err());
        assert!(two_interval_bound(3, 0.6, 0.5).is_err());
    }

    #[test]
    fn disk_interval_degenerate_delta() {
        let b = disk_interval_bound(9, 0.4, 0.4).unwrap();
        assert_eq!((b.eta, b.xi), (9, 0));
        assert!(disk_interval_bound(3, 0.5, 0.4).is_err());
        assert!(disk_interval_bound(3, 0.1, 1.0).is_err());
    }

    #[test]
    fn c0_value() {
        assert!((C0 - (1.0 + 2f64.sqrt()).ln()).abs() < 1e-15);
        assert!((C0 - 0.8814).abs() < 1e-4);
    }

    #[test]
    fn rho_edges() {
        let kappa: f64 = 49.0;
        let r = rho_factor(7.0, kappa).unwrap();
        assert!((r - 0.75).abs() < 1e-14);
        assert_eq!(rho_factor(1.0, 1.0).unwrap(), 0.0);
        assert!(rho_factor(100.0, kappa).is_err());
    }

    #[test]
    fn estimate_from_substitution() {
        let n = admm_iteration_estimate(1.0, 1.0, std::f64::consts::E, 1.0).unwrap();
        assert_eq!(n, 4);
    }

    #[test]
    fn curve_regime_is_enforced() {
        let f = ConditioningFactors {
            c1: 1.0,
            kappa_p: 1.0,
            kappa_x: Some(1.0),
            kappa_m: 1.0,
        };
        assert!(theorem_curve(CurveKind::Thm7, 5, 1.0, 0.5, 2.0, &f, 1e-6).is_err());
        assert!(theorem_curve(CurveKind::Thm9, 5, 4.0, 0.5, 2.0, &f, 1e-6).is_err());
        let c = theorem_curve(CurveKind::Thm7, 5, 4.0, 0.5, 2.0, &f, 1e-6).unwrap();
        assert_eq!(c.values.len(), 6);
        assert!(c.values[0] >= 2.0);
    }

    #[test]
    fn curve_csv_has_header() {
        let f = ConditioningFactors {
            c1: 1.0,
            kappa_p: 1.0,
            kappa_x: Some(1.0),
            kappa_m: 1.0,
        };
        let c = theorem_curve(CurveKind::Lemma23, 2, 1.0, 0.5, 2.0, &f, 1e-6).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("k,value,kind\n0,"));
        assert_eq!(s.lines().count(), 4);
    }
}
