//! Experiment pipeline behind the `saddle` command-line tool.

use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{admm_solve, make_engine, IterationTrace, MethodTag, Solve};
use crate::bounds::{theorem_curve, BoundCurve, CurveKind};
use crate::error::{Result, SaddleError};
use crate::gmres::{admm_gmres_solve, Side};
use crate::problem::SaddleProblem;
use crate::randgen::{random_problem, sample_beta, GenSpec};
use crate::spectral::{conditioning_factors, dtilde_extremes};

/// Upper end of the condition-number range used by the scaling filter.
pub const KAPPA_FILTER: f64 = 1e4;
/// Slope of the reference iteration curve `17√κ`.
pub const REFERENCE_SLOPE: f64 = 17.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Admm,
    GmresLeft,
    GmresRight,
}

impl FromStr for Method {
    type Err = SaddleError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "admm" => Ok(Method::Admm),
            "gmres-left" => Ok(Method::GmresLeft),
            "gmres-right" => Ok(Method::GmresRight),
            _ => Err(SaddleError::Parameter(format!(
                "unknown method '{s}' (expected admm, gmres-left or gmres-right)"
            ))),
        }
    }
}

/// How the ADMM parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaSpec {
    /// `√(mℓ)` from the problem's `D̃` extremes.
    Auto,
    /// `sample_beta(seed)`.
    Random(u64),
    Value(f64),
}

impl FromStr for BetaSpec {
    type Err = SaddleError;
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(BetaSpec::Auto);
        }
        if let Some(seed) = s.strip_prefix("random:") {
            return seed
                .parse()
                .map(BetaSpec::Random)
                .map_err(|_| SaddleError::Parameter(format!("invalid seed in beta spec '{s}'")));
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(BetaSpec::Value(v)),
            _ => Err(SaddleError::Parameter(format!(
                "beta must be a positive number, 'auto' or 'random:SEED', got '{s}'"
            ))),
        }
    }
}

pub fn resolve_beta(problem: &SaddleProblem, spec: BetaSpec) -> Result<f64> {
    Ok(match spec {
        BetaSpec::Auto => dtilde_extremes(problem)?.optimal_beta(),
        BetaSpec::Random(seed) => sample_beta(seed),
        BetaSpec::Value(v) => v,
    })
}

/// One `(problem, method, β)` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem_id: String,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub s: Option<f64>,
    pub seed: Option<u64>,
    pub beta: f64,
    pub method_tag: String,
    pub kappa: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_rel_residual: f64,
}

pub fn solve(
    problem: &SaddleProblem,
    method: Method,
    beta: f64,
    epsilon: f64,
    max_iter: usize,
) -> Result<Solve> {
    let engine = make_engine(problem, beta)?;
    let u0 = problem.zero_iterate();
    match method {
        Method::Admm => admm_solve(&engine, &u0, epsilon, max_iter),
        Method::GmresLeft => admm_gmres_solve(&engine, Side::Left, &u0, epsilon, max_iter),
        Method::GmresRight => admm_gmres_solve(&engine, Side::Right, &u0, epsilon, max_iter),
    }
}

pub fn run_record(problem: &SaddleProblem, problem_id: &str, trace: &IterationTrace) -> Result<RunRecord> {
    let kappa = dtilde_extremes(problem)?.kappa;
    let prov = problem.provenance();
    Ok(RunRecord {
        problem_id: problem_id.to_string(),
        nx: problem.nx(),
        ny: problem.ny(),
        nz: problem.nz(),
        s: prov.map(|p| p.s),
        seed: prov.map(|p| p.seed),
        beta: trace.beta,
        method_tag: trace.method_tag.as_str().to_string(),
        kappa,
        iterations: trace.iterations,
        converged: trace.converged,
        final_rel_residual: trace.final_rel_residual(),
    })
}

/// `k,rel_residual` rows.
pub fn write_trace_csv<W: Write>(trace: &IterationTrace, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["k", "rel_residual"])?;
    for (k, r) in trace.relative_residuals().iter().enumerate() {
        wtr.write_record([k.to_string(), format!("{r:e}")])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Bound curve for `problem` at `beta`, using its computed conditioning factors.
pub fn bound_curve(
    problem: &SaddleProblem,
    kind: CurveKind,
    beta: f64,
    k_max: usize,
    epsilon: f64,
) -> Result<BoundCurve> {
    let dt = dtilde_extremes(problem)?;
    let factors = conditioning_factors(problem, beta)?;
    theorem_curve(kind, k_max, beta, dt.m, dt.ell, &factors, epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub count: usize,
    pub dim_max: usize,
    pub s_max: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            count: 200,
            dim_max: 60,
            s_max: 1.0,
            epsilon: 1e-6,
            seed: 0,
            max_iter: 100_000,
        }
    }
}

impl ScalingConfig {
    /// The large sweep: 1000 problems with `nx` up to 1000.
    pub fn full() -> Self {
        ScalingConfig {
            count: 1000,
            dim_max: 1000,
            ..ScalingConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim_max < 1 {
            return Err(SaddleError::Parameter("dim-max must be at least 1".into()));
        }
        if !(self.s_max >= 0.0) || !self.s_max.is_finite() {
            return Err(SaddleError::Parameter(format!(
                "s-max must be finite and nonnegative, got {}",
                self.s_max
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(SaddleError::Parameter(format!(
                "eps must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.max_iter < 1 {
            return Err(SaddleError::Parameter("max-iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// One `(problem, method, β)` run of the scaling sweep. The columns extend
/// [`RunRecord`] with the acceptance filter, the `17√κ` reference and an
/// error message; a failed run keeps its row with empty result fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub problem_id: String,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub s: f64,
    pub seed: u64,
    pub beta: f64,
    pub method_tag: String,
    pub kappa: f64,
    pub iterations: Option<usize>,
    pub converged: bool,
    pub final_rel_residual: Option<f64>,
    pub kappa_in_range: bool,
    pub reference_17_sqrt_kappa: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSummary {
    pub problems: usize,
    /// Problems with `κ ≤ 10⁴`.
    pub in_range: usize,
    /// Runs that ended in an error.
    pub failures: usize,
    /// Share of in-range GMRES runs with at most `⌈17√κ⌉ + 10` iterations.
    pub gmres_within_reference: f64,
    /// Least-squares slope of `ln(iterations)` against `ln κ` for ADMM.
    pub admm_loglog_slope: Option<f64>,
    pub gmres_loglog_slope: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct ScalingJob {
    index: usize,
    spec: GenSpec,
    beta_seed: u64,
}

fn scaling_jobs(cfg: &ScalingConfig) -> Vec<ScalingJob> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    (0..cfg.count)
        .map(|index| {
            let nx = rng.random_range(1..=cfg.dim_max);
            let ny = rng.random_range(1..=nx);
            let nz = rng.random_range(1..=ny);
            let s = if cfg.s_max > 0.0 {
                rng.random_range(0.0..=cfg.s_max)
            } else {
                0.0
            };
            let seed: u64 = rng.random();
            let beta_seed: u64 = rng.random();
            ScalingJob {
                index,
                spec: GenSpec { nx, ny, nz, s, seed },
                beta_seed,
            }
        })
        .collect()
}

fn run_job(job: &ScalingJob, cfg: &ScalingConfig) -> [ScalingRow; 2] {
    let GenSpec { nx, ny, nz, s, seed } = job.spec;
    let row = |method: MethodTag, beta: f64| ScalingRow {
        problem_id: format!("p{:04}", job.index),
        nx,
        ny,
        nz,
        s,
        seed,
        beta,
        method_tag: method.as_str().to_string(),
        kappa: f64::NAN,
        iterations: None,
        converged: false,
        final_rel_residual: None,
        kappa_in_range: false,
        reference_17_sqrt_kappa: f64::NAN,
        error: String::new(),
    };
    let mut admm = row(MethodTag::Admm, f64::NAN);
    let mut gmres = row(MethodTag::AdmmGmresRight, sample_beta(job.beta_seed));

    let problem = match random_problem(&job.spec) {
        Ok(p) => p,
        Err(e) => {
            admm.error = format!("generate: {e}");
            gmres.error = admm.error.clone();
            return [admm, gmres];
        }
    };
    let record = |r: &mut ScalingRow, method: Method| {
        match solve(&problem, method, r.beta, cfg.epsilon, cfg.max_iter) {
            Ok(out) => {
                r.iterations = Some(out.trace.iterations);
                r.converged = out.trace.converged;
                r.final_rel_residual = Some(out.trace.final_rel_residual());
            }
            Err(e) => r.error = e.to_string(),
        }
    };
    match dtilde_extremes(&problem) {
        Ok(dt) => {
            for r in [&mut admm, &mut gmres] {
                r.kappa = dt.kappa;
                r.kappa_in_range = dt.kappa <= KAPPA_FILTER;
                r.reference_17_sqrt_kappa = REFERENCE_SLOPE * dt.kappa.sqrt();
            }
            admm.beta = dt.optimal_beta();
            record(&mut admm, Method::Admm);
        }
        Err(e) => {
            admm.error = format!("spectrum: {e}");
            gmres.error = admm.error.clone();
        }
    }
    record(&mut gmres, Method::GmresRight);
    [admm, gmres]
}

/// Generates `cfg.count` problems and runs ADMM at `√(mℓ)` and right-side
/// ADMM-GMRES at a random `β` on each. Problems run in parallel; rows come
/// out in generation order, ADMM first within each problem.
pub fn run_scaling(cfg: &ScalingConfig) -> Result<Vec<ScalingRow>> {
    cfg.validate()?;
    let jobs = scaling_jobs(cfg);
    let pairs: Vec<[ScalingRow; 2]> = jobs.par_iter().map(|job| run_job(job, cfg)).collect();
    Ok(pairs.into_iter().flatten().collect())
}

pub fn reference_iterations(kappa: f64) -> usize {
    (REFERENCE_SLOPE * kappa.sqrt()).ceil() as usize + 10
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ls_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn summarize(rows: &[ScalingRow]) -> ScalingSummary {
    let of = |tag: MethodTag| -> Vec<&ScalingRow> {
        rows.iter().filter(|r| r.method_tag == tag.as_str()).collect()
    };
    let (admm, gmres) = (of(MethodTag::Admm), of(MethodTag::AdmmGmresRight));
    let in_range: Vec<&ScalingRow> = gmres.iter().copied().filter(|r| r.kappa_in_range).collect();
    let within = in_range
        .iter()
        .filter(|r| r.converged && r.iterations.is_some_and(|it| it <= reference_iterations(r.kappa)))
        .count();
    let loglog = |runs: &[&ScalingRow]| {
        let pts: Vec<(f64, f64)> = runs
            .iter()
            .filter(|r| r.kappa_in_range && r.converged)
            .filter_map(|r| r.iterations.filter(|&it| it > 0).map(|it| (r.kappa.ln(), (it as f64).ln())))
            .collect();
        ls_slope(&pts)
    };
    ScalingSummary {
        problems: gmres.len(),
        in_range: in_range.len(),
        failures: rows.iter().filter(|r| !r.error.is_empty()).count(),
        gmres_within_reference: if in_range.is_empty() {
            1.0
        } else {
            within as f64 / in_range.len() as f64
        },
        admm_loglog_slope: loglog(&admm),
        gmres_loglog_slope: loglog(&gmres),
    }
}

pub fn write_scaling_csv<W: Write>(rows: &[ScalingRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}
