use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use saddle::bench::{
    bound_curve, resolve_beta, run_record, run_scaling, solve, summarize, write_scaling_csv,
    write_trace_csv, BetaSpec, Method, ScalingConfig,
};
use saddle::bounds::CurveKind;
use saddle::randgen::{random_problem, GenSpec};
use saddle::spectral::classify_and_verify;
use saddle::{Result, SaddleError, SaddleProblem};

#[derive(Parser)]
#[command(name = "saddle", version, about = "ADMM / ADMM-GMRES saddle-point experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Admm,
    GmresLeft,
    GmresRight,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Admm => Method::Admm,
            MethodArg::GmresLeft => Method::GmresLeft,
            MethodArg::GmresRight => Method::GmresRight,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Prop5,
    Thm7,
    Thm9,
    Lemma22,
    Lemma23,
}

impl From<KindArg> for CurveKind {
    fn from(k: KindArg) -> CurveKind {
        match k {
            KindArg::Prop5 => CurveKind::Prop5,
            KindArg::Thm7 => CurveKind::Thm7,
            KindArg::Thm9 => CurveKind::Thm9,
            KindArg::Lemma22 => CurveKind::Lemma22,
            KindArg::Lemma23 => CurveKind::Lemma23,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Desk,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random problem and write it as JSON.
    Gen {
        #[arg(long)]
        nx: usize,
        #[arg(long)]
        ny: usize,
        #[arg(long)]
        nz: usize,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Solve a problem; prints the run record as JSON.
    Solve {
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "gmres-right")]
        method: MethodArg,
        /// A positive number, `auto` (sqrt(m*ell)) or `random:SEED`.
        #[arg(long, default_value = "auto")]
        beta: String,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        /// Write the per-iteration trace (k, rel_residual) here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Also write the run record to this file.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Spectral report of the ADMM kernel as JSON.
    Spectrum {
        problem: PathBuf,
        #[arg(long, default_value = "auto")]
        beta: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate a residual bound curve as CSV.
    Bounds {
        problem: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value = "auto")]
        beta: String,
        #[arg(long, default_value_t = 50)]
        k_max: usize,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Iteration-count scaling sweep over random problems.
    Scaling {
        /// `full` switches the defaults to 1000 problems with nx up to 1000.
        #[arg(long, value_enum, default_value = "desk")]
        profile: Profile,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        dim_max: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        s_max: f64,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn beta_spec(s: &str) -> Result<BetaSpec> {
    s.parse()
}

fn problem_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "problem".into())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            nx,
            ny,
            nz,
            s,
            seed,
            output,
        } => {
            let problem = random_problem(&GenSpec { nx, ny, nz, s, seed })?;
            problem.save(&output)?;
            println!("{}", output.display());
        }
        Command::Solve {
            problem,
            method,
            beta,
            eps,
            max_iter,
            trace,
            record,
        } => {
            let p = SaddleProblem::load(&problem)?;
            let beta = resolve_beta(&p, beta_spec(&beta)?)?;
            info!("solving {} with beta = {beta:e}", problem.display());
            let out = solve(&p, method.into(), beta, eps, max_iter)?;
            if let Some(path) = trace {
                write_trace_csv(&out.trace, File::create(path)?)?;
            }
            let rec = run_record(&p, &problem_id(&problem), &out.trace)?;
            let json = serde_json::to_string_pretty(&rec)?;
            if let Some(path) = record {
                std::fs::write(path, format!("{json}\n"))?;
            }
            println!("{json}");
        }
        Command::Spectrum {
            problem,
            beta,
            output,
        } => {
            let p = SaddleProblem::load(&problem)?;
            let beta = resolve_beta(&p, beta_spec(&beta)?)?;
            let report = classify_and_verify(&p, beta)?;
            let mut w = open_out(output.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
            w.flush()?;
        }
        Command::Bounds {
            problem,
            kind,
            beta,
            k_max,
            eps,
            output,
        } => {
            let p = SaddleProblem::load(&problem)?;
            let beta = resolve_beta(&p, beta_spec(&beta)?)?;
            let curve = bound_curve(&p, kind.into(), beta, k_max, eps)?;
            curve.write_csv(open_out(output.as_deref())?)?;
        }
        Command::Scaling {
            profile,
            count,
            dim_max,
            s_max,
            eps,
            seed,
            max_iter,
            output,
        } => {
            let base = match profile {
                Profile::Desk => ScalingConfig::default(),
                Profile::Full => ScalingConfig::full(),
            };
            let cfg = ScalingConfig {
                count: count.unwrap_or(base.count),
                dim_max: dim_max.unwrap_or(base.dim_max),
                s_max,
                epsilon: eps,
                seed,
                max_iter,
            };
            let rows = run_scaling(&cfg)?;
            write_scaling_csv(&rows, BufWriter::new(File::create(&output)?))?;
            println!("{}", serde_json::to_string_pretty(&summarize(&rows))?);
        }
    }
    Ok(())
}

fn exit_code(err: &SaddleError) -> u8 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
