use saddle::randgen::{component_rng, haar_orthogonal};
use saddle::{dtilde_extremes, random_problem, sample_beta, GenSpec};

fn spec(nx: usize, ny: usize, nz: usize, s: f64, seed: u64) -> GenSpec {
    GenSpec { nx, ny, nz, s, seed }
}

#[test]
fn same_seed_is_bit_identical() {
    let a = random_problem(&spec(12, 7, 3, 0.6, 99)).unwrap();
    let b = random_problem(&spec(12, 7, 3, 0.6, 99)).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let c = random_problem(&spec(12, 7, 3, 0.6, 100)).unwrap();
    assert_ne!(a.a(), c.a());
}

#[test]
fn components_do_not_depend_on_other_dimensions() {
    // The right-hand side streams are independent of the matrix draws.
    let a = random_problem(&spec(12, 7, 3, 0.6, 5)).unwrap();
    let b = random_problem(&spec(12, 7, 3, 1.4, 5)).unwrap();
    assert_eq!(a.rx(), b.rx());
    assert_eq!(a.ry(), b.ry());
}

#[test]
fn provenance_is_attached() {
    let p = random_problem(&spec(6, 4, 2, 0.5, 42)).unwrap();
    let prov = p.provenance().unwrap();
    assert_eq!((prov.nx, prov.ny, prov.nz, prov.s, prov.seed), (6, 4, 2, 0.5, 42));
}

#[test]
fn unit_spread_square_is_perfectly_conditioned() {
    let p = random_problem(&spec(5, 5, 2, 0.0, 7)).unwrap();
    let dt = dtilde_extremes(&p).unwrap();
    assert!((dt.m - 1.0).abs() < 1e-12 && (dt.ell - 1.0).abs() < 1e-12);
}

#[test]
fn generated_data_is_well_posed() {
    for seed in 0..20 {
        let p = random_problem(&spec(10, 6, 3, 1.0, seed)).unwrap();
        let aat = p.a() * p.a().transpose();
        assert!(aat.symmetric_eigenvalues().min() > 0.0);
        assert!(p.d().symmetric_eigenvalues().min() > 0.0);
        assert_eq!(p.d(), &p.d().transpose());
        assert_eq!(p.b().shape(), (6, 3));
    }
}

#[test]
fn spread_sweep_covers_condition_range() {
    let mut kappas = Vec::new();
    for (i, s) in [0.0, 0.25, 0.5, 0.75, 1.0].into_iter().enumerate() {
        for j in 0..8 {
            let p = random_problem(&spec(30, 20, 8, s, 1000 * i as u64 + j)).unwrap();
            kappas.push(dtilde_extremes(&p).unwrap().kappa);
        }
    }
    let lo = kappas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = kappas.iter().cloned().fold(0.0, f64::max);
    assert!((1.0..10.0).contains(&lo), "min kappa {lo}");
    assert!(hi > 1e2, "max kappa {hi}");
}

#[test]
fn haar_first_entry_statistics() {
    let n = 8;
    let draws = 10_000;
    let mut rng = component_rng(2024, 77);
    let vals: Vec<f64> = (0..draws).map(|_| haar_orthogonal(&mut rng, n)[(0, 0)]).collect();
    let mean = vals.iter().sum::<f64>() / draws as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / draws as f64;
    assert!(mean.abs() < 0.02, "mean {mean}");
    assert!((var * n as f64 - 1.0).abs() < 0.1, "var {var}");
}

#[test]
fn log_beta_is_uniform() {
    let n = 100_000;
    let mut logs: Vec<f64> = (0..n as u64).map(|s| sample_beta(s).log10()).collect();
    logs.sort_by(f64::total_cmp);
    let ks = logs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let cdf = (x + 2.0) / 4.0;
            (cdf - i as f64 / n as f64).abs().max((cdf - (i + 1) as f64 / n as f64).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS statistic {ks}");
    assert!(logs[0] >= -2.0 && logs[n - 1] <= 2.0);
}
