//! Command-line front end: solve, enumerate, benchmark and convert instances.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cpdqs_core::bench::{run_bench_to, BenchConfig};
use cpdqs_core::drivers::{multistart, solve_exact, Algorithm, MultistartPlan, SolverOptions};
use cpdqs_core::energy::PenaltyParams;
use cpdqs_core::io::benchmark::{import_benchmark, FormatHint};
use cpdqs_core::io::canonical::write_instance;
use cpdqs_core::io::results::{write_results, write_trace, ResultRow};
use cpdqs_core::model::InstanceSpec;
use cpdqs_core::rounding::RoundingRule;
use cpdqs_core::spg::{DirectionStep, Safeguard, SpgConfig};

/// Exit codes, one per failure class.
mod exit {
    pub const OTHER: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const IO: u8 = 3;
    pub const INPUT: u8 = 4;
    pub const SOLVER: u8 = 5;
}

#[derive(Parser)]
#[command(name = "cpdqs", version)]
#[command(about = "Rotamer assignment by spectral projected gradient on the QSAP relaxation")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)] // parsed once per process
enum Commands {
    /// Solve one instance with SCSC or SCP and write a results row
    Solve(SolveArgs),
    /// Enumerate every assignment of a small instance
    Exact {
        /// Instance file (canonical or WCSP)
        #[arg(long)]
        instance: PathBuf,
        /// Also write a results CSV here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run algorithms over every instance in a directory
    Bench {
        /// Directory holding .cpdqs / .wcsp files
        #[arg(long)]
        dir: PathBuf,
        /// Comma-separated list of scsc, scp, exact
        #[arg(long, value_delimiter = ',', default_value = "scsc,scp")]
        algorithms: Vec<Algorithm>,
        /// Results CSV; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Starts per instance and algorithm
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Penalty weight for SCP
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value = "greedy")]
        round_rule: RoundingRule,
    },
    /// Convert an instance to the canonical format
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Format of the input file
        #[arg(long, default_value = "auto")]
        format: FormatHint,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    /// First start at the block-simplex center, later starts random
    Uniform,
    /// Every start drawn uniformly from the block simplex
    Random,
}

#[derive(clap::Args)]
struct SolveArgs {
    /// Instance file (canonical or WCSP)
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "scsc")]
    algorithm: Algorithm,
    /// Penalty weight for SCP
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "uniform")]
    init: InitArg,
    /// Number of starts; the best rounded objective is reported
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, default_value = "greedy")]
    round_rule: RoundingRule,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eps_a: Option<f64>,
    #[arg(long)]
    eps_b: Option<f64>,
    /// Nonmonotone window length M
    #[arg(long)]
    history: Option<usize>,
    /// Consecutive identical roundings that stop the run
    #[arg(long)]
    stall: Option<usize>,
    /// Iterations between rounding probes
    #[arg(long)]
    probe_every: Option<usize>,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sigma1: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long)]
    lambda_max: Option<f64>,
    #[arg(long)]
    direction_step: Option<DirectionStep>,
    #[arg(long)]
    safeguard: Option<Safeguard>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Per-iteration trace CSV of the reported run
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Results CSV; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SolveArgs {
    fn spg_config(&self) -> SpgConfig {
        let mut cfg = SpgConfig::default();
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        apply!(
            eps,
            eps_a,
            eps_b,
            history,
            probe_every,
            alpha0,
            gamma,
            sigma1,
            sigma2,
            lambda0,
            lambda_min,
            lambda_max,
            direction_step,
            safeguard,
            max_iter
        );
        if let Some(n) = self.stall {
            cfg.stall_n = n;
        }
        cfg.record_trace = self.trace.is_some();
        cfg
    }
}

fn load(path: &Path, format: FormatHint) -> Result<InstanceSpec> {
    import_benchmark(path, format).with_context(|| format!("cannot load {}", path.display()))
}

fn penalty(sigma: Option<f64>) -> Result<PenaltyParams> {
    Ok(match sigma {
        Some(s) => PenaltyParams::new(s)?,
        None => PenaltyParams::default(),
    })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let spec = load(&args.instance, FormatHint::Auto)?;
    let cfg = args.spg_config();
    cfg.validate()?;
    let options = SolverOptions {
        spg: cfg,
        penalty: penalty(args.sigma)?,
        rounding: args.round_rule,
    };
    let plan = MultistartPlan {
        center_first: matches!(args.init, InitArg::Uniform),
        ..MultistartPlan::new(args.restarts, args.seed)
    };
    let report = multistart(&spec, args.algorithm, &options, plan)?;
    if let Some(path) = &args.trace {
        let file =
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        write_trace(BufWriter::new(file), &report.trace)?;
    }
    write_results(
        output(args.out.as_deref())?,
        &[ResultRow::from_report(&report)],
    )?;
    eprintln!(
        "{}: {} rounded objective {} choice {}",
        spec.name(),
        report.algorithm,
        report.rounded_objective,
        report.choice
    );
    Ok(())
}

fn cmd_exact(instance: &Path, out: Option<&Path>) -> Result<()> {
    let spec = load(instance, FormatHint::Auto)?;
    let (choice, report) = solve_exact(&spec)?;
    println!("optimum {}", report.rounded_objective);
    println!("choice {choice}");
    if let Some(path) = out {
        write_results(output(Some(path))?, &[ResultRow::from_report(&report)])?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Commands::Solve(args) => cmd_solve(args),
        Commands::Exact { instance, out } => cmd_exact(&instance, out.as_deref()),
        Commands::Bench {
            dir,
            algorithms,
            out,
            restarts,
            seed,
            sigma,
            round_rule,
        } => {
            let cfg = BenchConfig {
                algorithms,
                options: SolverOptions {
                    penalty: penalty(sigma)?,
                    rounding: round_rule,
                    ..SolverOptions::default()
                },
                restarts,
                seed,
                ..BenchConfig::default()
            };
            let rows = run_bench_to(&dir, &cfg, output(out.as_deref())?)?;
            let failed = rows.iter().filter(|r| r.is_error()).count();
            eprintln!("{} rows written, {failed} failed", rows.len());
            Ok(())
        }
        Commands::Convert { input, out, format } => {
            let spec = load(&input, format)?;
            write_instance(&spec, &out)?;
            eprintln!("{}: {}", spec.name(), spec.stats());
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use cpdqs_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidConfig(_) => exit::USAGE,
                E::Io(_) | E::Csv(_) => exit::IO,
                E::Parse { .. }
                | E::UnsupportedFormat { .. }
                | E::Structural(_)
                | E::Conformance(_)
                | E::InvalidInput(_)
                | E::InvalidAssignment { .. } => exit::INPUT,
                E::LineSearch { .. } | E::Numeric { .. } | E::SearchSpaceTooLarge { .. } => {
                    exit::SOLVER
                }
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return exit::IO;
        }
    }
    exit::OTHER
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
