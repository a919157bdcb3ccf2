//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use saddle::bench::{bound_curve, run_scaling, solve, summarize, Method, ScalingConfig};
use saddle::bounds::*;
use saddle::linalg::spectral_norm;
use saddle::spectral::{
    build_k_matrix, classify_and_verify, conditioning_factors, eigenvalues, real_tolerance,
    two_interval_endpoints, ENCLOSURE_SLACK,
};
use saddle::{
    admm_gmres_solve, admm_solve, direct_solve, dtilde_extremes, kkt_residual, make_engine,
    random_problem, sample_beta, GenSpec, Regime, SaddleProblem, Side,
};

struct Outcome {
    pass: bool,
    detail: String,
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Random problem sizes from a dedicated stream, `nx ≤ nx_max`.
fn random_specs(count: usize, nx_max: usize, salt: u64) -> Vec<GenSpec> {
    let mut rng = ChaCha20Rng::seed_from_u64(salt);
    (0..count)
        .map(|i| {
            let nx = rng.random_range(2..=nx_max);
            let ny = rng.random_range(2..=nx);
            let nz = rng.random_range(1..=ny);
            let s = rng.random_range(0.2..=1.0);
            GenSpec { nx, ny, nz, s, seed: salt * 1000 + i as u64 }
        })
        .collect()
}

fn problems(specs: &[GenSpec]) -> Vec<SaddleProblem> {
    specs.iter().map(|s| random_problem(s).expect("valid spec")).collect()
}

/// β values hitting every regime: γ = √κ, γ midway in [√κ, κ], and
/// γ = 1.5κ and 3κ approached from both sides.
fn beta_sweep(p: &SaddleProblem) -> Vec<f64> {
    let dt = dtilde_extremes(p).unwrap();
    let mid = 0.5 * (dt.kappa.sqrt() + dt.kappa);
    vec![dt.optimal_beta(), dt.m * mid, 1.5 * dt.ell, 3.0 * dt.ell, dt.m / 1.5, dt.m / 3.0]
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    let (mut worst_res, mut worst_gap, mut failures) = (0.0f64, 0.0f64, Vec::new());
    for i in 0..50 {
        let nx = rng.random_range(1..=20);
        let ny = rng.random_range(1..=nx);
        let nz = rng.random_range(1..=ny);
        let s = rng.random_range(0.0..=1.0);
        let p = random_problem(&GenSpec { nx, ny, nz, s, seed: 5000 + i }).unwrap();
        let dt = dtilde_extremes(&p).unwrap();
        let beta = dt.optimal_beta();
        let out = admm_solve(&make_engine(&p, beta).unwrap(), &p.zero_iterate(), 1e-6, 100_000).unwrap();
        let star = direct_solve(&p).unwrap();
        let rel = kkt_residual(&p, &out.solution).unwrap() / p.rhs_norm();
        let gap = (out.solution.stack() - star.stack()).norm() / star.norm().max(f64::MIN_POSITIVE);
        let f = conditioning_factors(&p, beta).unwrap();
        let estimate = admm_iteration_estimate(dt.kappa, f.c1, f.kappa_m, 1e-6).unwrap();
        worst_res = worst_res.max(rel);
        worst_gap = worst_gap.max(gap);
        if !out.trace.converged || rel > 1e-6 || out.trace.iterations > estimate {
            failures.push(format!("problem {i}: rel {rel:.2e}, iters {} vs estimate {estimate}", out.trace.iterations));
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(10);
    outcome(
        pass,
        format!(
            "50 problems, max rel residual {worst_res:.2e}, max distance to direct solution {worst_gap:.2e}, {:.2}s{}",
            elapsed.as_secs_f64(),
            failures.first().map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

fn criterion_2(ps: &[SaddleProblem]) -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for p in ps {
        let dt = dtilde_extremes(p).unwrap();
        for beta in beta_sweep(p) {
            let k = build_k_matrix(p, beta).unwrap().k;
            let norm = spectral_norm(&k);
            let g = dt.gamma(beta);
            let err = (norm - (g - 1.0) / (g + 1.0)).abs() / norm.max(f64::MIN_POSITIVE);
            // Exactly zero is the κ = 1, β = √(mℓ) corner.
            let err = if norm == 0.0 && g == 1.0 { 0.0 } else { err };
            worst = worst.max(err);
            count += 1;
        }
    }
    outcome(worst <= 1e-8, format!("{count} (problem, beta) pairs, max relative deviation {worst:.2e}"))
}

fn criterion_3(ps: &[SaddleProblem]) -> Outcome {
    let mut seen = [0usize; 3];
    let mut bad = Vec::new();
    for (i, p) in ps.iter().enumerate() {
        for beta in beta_sweep(p) {
            let rep = classify_and_verify(p, beta).unwrap();
            seen[rep.regime as usize] += 1;
            if !rep.enclosure_ok {
                bad.push(format!("problem {i} beta {beta:.3e}: enclosure violated"));
            }
            if rep.regime == Regime::TwoIntervals && p.nz() < p.ny() {
                let (lo, hi) = two_interval_endpoints(rep.gamma, rep.kappa);
                let tol = real_tolerance(rep.k_norm) + ENCLOSURE_SLACK;
                let inside = |z: &Complex64, sign: f64| {
                    z.im.abs() <= tol && (sign * z.re) >= lo - tol && (sign * z.re) <= hi + tol
                };
                let plus = rep.eigenvalues.iter().filter(|z| inside(z, 1.0)).count();
                let minus = rep.eigenvalues.iter().filter(|z| inside(z, -1.0)).count();
                if plus == 0 || minus == 0 {
                    bad.push(format!("problem {i} beta {beta:.3e}: {plus} / {minus} eigenvalues per interval"));
                }
            }
        }
    }
    let covered = seen.iter().all(|&n| n > 0);
    outcome(
        bad.is_empty() && covered,
        format!(
            "regime counts disk_and_interval {}, single_interval {}, two_intervals {}{}",
            seen[0],
            seen[1],
            seen[2],
            bad.first().map(|b| format!("; {b}")).unwrap_or_default()
        ),
    )
}

fn criterion_4(ps: &[SaddleProblem]) -> Outcome {
    let (mut worst_im, mut worst_margin, mut bad) = (0.0f64, f64::INFINITY, Vec::new());
    for (i, p) in ps.iter().enumerate() {
        let dt = dtilde_extremes(p).unwrap();
        for beta in [2.0 * dt.ell, dt.m / 2.0] {
            let k = build_k_matrix(p, beta).unwrap().k;
            let norm = spectral_norm(&k);
            let im = eigenvalues(&k).unwrap().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            worst_im = worst_im.max(im / norm);
            let r = (beta / dt.ell).max(dt.m / beta);
            let bound = 1.0 + 1.0 / (r - 1.0) + 1e-6;
            match conditioning_factors(p, beta).unwrap().kappa_x {
                Some(kx) => {
                    worst_margin = worst_margin.min(bound - kx);
                    if kx > bound {
                        bad.push(format!("problem {i}: kappa_X {kx:.4} > {bound:.4}"));
                    }
                }
                None => bad.push(format!("problem {i}: kappa_X not computable")),
            }
            if im > 1e-8 * norm {
                bad.push(format!("problem {i}: imaginary part {im:.2e}"));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "max |Im|/||K|| {worst_im:.2e}, min bound margin {worst_margin:.3e}{}",
            bad.first().map(|b| format!("; {b}")).unwrap_or_default()
        ),
    )
}

fn criterion_5() -> Outcome {
    let specs = random_specs(20, 25, 7);
    let (mut worst, mut compared, mut bad) = (f64::NEG_INFINITY, 0, Vec::new());
    for (i, p) in problems(&specs).iter().enumerate() {
        let beta = sample_beta(900 + i as u64);
        let e = make_engine(p, beta).unwrap();
        let u0 = p.zero_iterate();
        let admm = admm_solve(&e, &u0, 1e-10, 400).unwrap().trace;
        let gm = admm_gmres_solve(&e, Side::Right, &u0, 1e-10, 400).unwrap().trace;
        let slack = 1e-9 * p.rhs_norm();
        // A finished GMRES run keeps its last residual: the minimal-residual
        // property makes later iterates no worse.
        let last = *gm.residuals.last().unwrap();
        for (k, &ra) in admm.residuals.iter().enumerate() {
            let rg = gm.residuals.get(k).copied().unwrap_or(last);
            let excess = rg - ra;
            worst = worst.max(excess / p.rhs_norm());
            compared += 1;
            if excess > slack {
                bad.push(format!("run {i} k {k}: excess {excess:.2e}"));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "20 paired runs, {compared} iterations compared, max (gmres - admm)/||r|| {worst:.2e}{}",
            bad.first().map(|b| format!("; {b}")).unwrap_or_default()
        ),
    )
}

fn criterion_6(ps: &[SaddleProblem]) -> Outcome {
    let (mut thm7, mut thm9, mut skipped, mut bad) = (0, 0, 0, Vec::new());
    let mut worst_ratio = 0.0f64;
    for (i, p) in ps.iter().enumerate() {
        let dt = dtilde_extremes(p).unwrap();
        for beta in beta_sweep(p) {
            let kind = if beta > dt.ell || beta < dt.m { CurveKind::Thm7 } else { CurveKind::Thm9 };
            let trace = solve(p, Method::GmresRight, beta, 1e-12, p.dim()).unwrap().trace;
            let rel = trace.relative_residuals();
            let curve = match bound_curve(p, kind, beta, rel.len(), 1e-12) {
                Ok(c) => c,
                Err(_) if kind == CurveKind::Thm9 => {
                    skipped += 1;
                    continue;
                }
                Err(e) => {
                    bad.push(format!("problem {i}: {e}"));
                    continue;
                }
            };
            match kind {
                CurveKind::Thm7 => thm7 += 1,
                _ => thm9 += 1,
            }
            for (k, (&r, &bound)) in rel.iter().zip(&curve.values).enumerate().skip(2) {
                worst_ratio = worst_ratio.max(r / bound);
                if r > bound {
                    bad.push(format!("problem {i} beta {beta:.3e} k {k}: {r:.2e} > {bound:.2e}"));
                }
            }
        }
    }
    outcome(
        bad.is_empty() && thm7 > 0 && thm9 > 0,
        format!(
            "{thm7} thm7 and {thm9} thm9 runs ({skipped} without kappa_X), max observed/bound {worst_ratio:.2e}{}",
            bad.first().map(|b| format!("; {b}")).unwrap_or_default()
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let rows = run_scaling(&ScalingConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let s = summarize(&rows);
    let slope = s.admm_loglog_slope.unwrap_or(f64::NAN);
    let pass = s.gmres_within_reference >= 0.98
        && (0.35..=0.65).contains(&slope)
        && s.failures == 0
        && elapsed < Duration::from_secs(300);
    outcome(
        pass,
        format!(
            "{} problems ({} with kappa <= 1e4), gmres within 17 sqrt(kappa)+10: {:.1}%, admm log-log slope {slope:.3} (target [0.35, 0.65]), gmres slope {:.3}, failures {}, {:.1}s",
            s.problems,
            s.in_range,
            100.0 * s.gmres_within_reference,
            s.gmres_loglog_slope.unwrap_or(f64::NAN),
            s.failures,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    let linspace = |lo: f64, hi: f64, n: usize| (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64);

    let mut interval_err = 0.0f64;
    for &(k, c, a) in &[(5, 0.3, 0.2), (8, -0.4, 0.5), (12, 0.0, 0.9)] {
        let norm = cheb(k, (1.0 - c) / a).abs();
        let sampled = linspace(c - a, c + a, 10_000)
            .map(|z| cheb(k, (z - c) / a).abs() / norm)
            .fold(0.0, f64::max);
        interval_err = interval_err.max((sampled - interval_bound(k, c, a).unwrap()).abs());
    }
    let interval_ok = interval_err <= 1e-6;
    notes.push(format!("interval |grid - bound| {interval_err:.1e}"));

    let (k, c, a) = (12, 0.6, 0.25);
    let b = two_interval_bound(k, c, a).unwrap();
    let two_max = linspace(c - a, c + a, 10_000)
        .chain(linspace(-c - a, -c + a, 10_000))
        .map(|z| two_interval_poly(z, c, a, b.eta, b.xi).abs())
        .fold(0.0, f64::max);
    let two_ok = two_max <= b.upper + 1e-9;
    notes.push(format!("two-interval max {two_max:.3e} <= {:.3e}", b.upper));

    let (k, a_d, a_i) = (10, 0.3, 0.6);
    let d = disk_interval_bound(k, a_d, a_i).unwrap();
    let circle = (0..3600).map(|j| Complex64::from_polar(a_d, std::f64::consts::TAU * j as f64 / 3600.0));
    let line = linspace(-a_i, a_i, 10_000).map(|x| Complex64::new(x, 0.0));
    let disk_max = circle
        .chain(line)
        .map(|z| disk_interval_poly(z, a_i, d.eta, d.xi).norm())
        .fold(0.0, f64::max);
    let disk_ok = disk_max <= d.upper + 1e-9;
    notes.push(format!("disk-interval max {disk_max:.3e} <= {:.3e}", d.upper));

    let mut tight_err = 0.0f64;
    let mut circle_ok = true;
    for k in [2, 4, 6] {
        for eta in [0.5, 1.0, 2.0] {
            let bound = chebyshev_disk_bound(k, eta);
            let sampled = (0..3600)
                .map(|j| cheb_complex(k, Complex64::from_polar(eta, std::f64::consts::TAU * j as f64 / 3600.0)).norm())
                .fold(0.0, f64::max);
            circle_ok &= sampled <= bound + 1e-9;
            tight_err = tight_err.max((bound - sampled).abs() / bound);
        }
    }
    let tight_ok = circle_ok && tight_err <= 1e-6;
    notes.push(format!("circle bound relative gap {tight_err:.1e}"));

    outcome(interval_ok && two_ok && disk_ok && tight_ok, notes.join(", "))
}

fn cli(args: &[&str], dir: &std::path::Path) -> Option<Vec<u8>> {
    let out = Command::new(env!("CARGO_BIN_EXE_saddle")).args(args).current_dir(dir).output().ok()?;
    out.status.success().then_some(out.stdout)
}

fn criterion_9() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return outcome(false, format!("no temp dir: {e}")),
    };
    let path = dir.path();
    let read = |name: &str| std::fs::read(path.join(name)).ok();
    let gen = |o: &str| cli(&["gen", "--nx", "40", "--ny", "25", "--nz", "10", "--s", "0.8", "--seed", "42", "-o", o], path);
    let scaling = |o: &str| cli(&["scaling", "--seed", "3", "-o", o], path);

    let gen_ok = gen("g1.json").is_some() && gen("g2.json").is_some() && read("g1.json").is_some() && read("g1.json") == read("g2.json");
    let (s1, s2) = (scaling("s1.csv"), scaling("s2.csv"));
    let scaling_ok = s1.is_some() && s1 == s2 && read("s1.csv").is_some() && read("s1.csv") == read("s2.csv");
    let bytes = read("s1.csv").map(|b| b.len()).unwrap_or(0);
    outcome(
        gen_ok && scaling_ok,
        format!("gen identical: {gen_ok}, scaling CSV and summary identical: {scaling_ok} ({bytes} bytes)"),
    )
}

fn main() -> ExitCode {
    let shared = problems(&random_specs(20, 20, 3));
    let criteria: Vec<(&str, Check)> = vec![
        ("oracle equivalence", Box::new(criterion_1)),
        ("kernel norm identity", Box::new(|| criterion_2(&shared))),
        ("spectral enclosures", Box::new(|| criterion_3(&shared))),
        ("extremal-beta real spectrum and kappa_X", Box::new(|| criterion_4(&shared))),
        ("GMRES dominance", Box::new(criterion_5)),
        ("bound curves dominate", Box::new(|| criterion_6(&shared))),
        ("scaling sweep", Box::new(criterion_7)),
        ("bound sampling oracles", Box::new(criterion_8)),
        ("determinism", Box::new(criterion_9)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("{} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
