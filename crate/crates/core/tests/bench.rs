mod common;

use common::{problem, seeded};
use saddle::bench::*;
use saddle::bounds::CurveKind;
use saddle::{dtilde_extremes, sample_beta};

#[test]
fn beta_resolution() {
    let p = seeded(42);
    let dt = dtilde_extremes(&p).unwrap();
    assert_eq!(resolve_beta(&p, BetaSpec::Auto).unwrap(), dt.optimal_beta());
    assert_eq!(resolve_beta(&p, BetaSpec::Random(3)).unwrap(), sample_beta(3));
    assert_eq!(resolve_beta(&p, "2.5".parse().unwrap()).unwrap(), 2.5);
}

#[test]
fn run_record_recomputes_kappa() {
    let p = seeded(42);
    let out = solve(&p, Method::Admm, 1.0, 1e-6, 10_000).unwrap();
    let rec = run_record(&p, "x", &out.trace).unwrap();
    assert_eq!(rec.kappa, dtilde_extremes(&p).unwrap().kappa);
    assert_eq!(rec.method_tag, "admm");
    assert_eq!(rec.iterations, out.trace.iterations);
    assert!(rec.converged);
}

#[test]
fn gmres_right_no_slower_than_admm_at_the_optimum() {
    // Not a per-instance guarantee for random beta; checked here at the same beta.
    for seed in 0..5 {
        let p = problem(20, 12, 6, 0.8, seed);
        let beta = dtilde_extremes(&p).unwrap().optimal_beta();
        let a = solve(&p, Method::Admm, beta, 1e-6, 10_000).unwrap().trace;
        let g = solve(&p, Method::GmresRight, beta, 1e-6, 10_000).unwrap().trace;
        assert!(g.iterations <= a.iterations);
    }
}

#[test]
fn trace_csv_rows() {
    let p = seeded(1);
    let out = solve(&p, Method::GmresLeft, 0.7, 1e-6, 100).unwrap();
    let mut buf = Vec::new();
    write_trace_csv(&out.trace, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), out.trace.residuals.len() + 1);
}

#[test]
fn observed_residuals_stay_below_theorem_curves() {
    let mut intermediate = 0;
    for seed in 0..6 {
        let p = problem(12, 8, 3, 0.6, seed);
        let dt = dtilde_extremes(&p).unwrap();
        let cases = [
            (dt.ell * 2.0, CurveKind::Thm7),
            (dt.m / 3.0, CurveKind::Thm7),
            (dt.optimal_beta(), CurveKind::Thm9),
            ((dt.m * dt.optimal_beta()).sqrt(), CurveKind::Thm9),
        ];
        for (beta, kind) in cases {
            let trace = solve(&p, Method::GmresRight, beta, 1e-10, 200).unwrap().trace;
            let rel = trace.relative_residuals();
            let curve = match bound_curve(&p, kind, beta, rel.len(), 1e-10) {
                Ok(c) => c,
                Err(_) if kind == CurveKind::Thm9 => continue,
                Err(e) => panic!("{e}"),
            };
            intermediate += usize::from(kind == CurveKind::Thm9);
            for (k, (r, bound)) in rel.iter().zip(&curve.values).enumerate().skip(2) {
                assert!(r <= bound, "seed {seed} beta {beta} k {k}");
            }
        }
    }
    assert!(intermediate >= 6, "only {intermediate} intermediate cases had kappa_X");
}

#[test]
fn scaling_rows_come_in_method_pairs() {
    let cfg = ScalingConfig { count: 10, dim_max: 12, ..ScalingConfig::default() };
    let rows = run_scaling(&cfg).unwrap();
    assert_eq!(rows.len(), 20);
    for pair in rows.chunks(2) {
        assert_eq!(pair[0].problem_id, pair[1].problem_id);
        assert_eq!(pair[0].method_tag, "admm");
        assert_eq!(pair[1].method_tag, "admm-gmres-right");
        assert_eq!(pair[0].kappa, pair[1].kappa);
        assert!(pair.iter().all(|r| r.error.is_empty() && r.converged));
        assert_eq!(pair[0].reference_17_sqrt_kappa, 17.0 * pair[0].kappa.sqrt());
    }
    assert_eq!(rows, run_scaling(&cfg).unwrap());
    let summary = summarize(&rows);
    assert_eq!(summary.problems, 10);
    assert_eq!(summary.failures, 0);
}

#[test]
fn scaling_config_validation() {
    let bad = ScalingConfig { epsilon: 0.0, ..ScalingConfig::default() };
    assert!(run_scaling(&bad).is_err());
    let full = ScalingConfig::full();
    assert_eq!((full.count, full.dim_max), (1000, 1000));
}
