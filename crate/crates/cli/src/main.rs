//! `perron`: Perron-Frobenius eigenvectors from stopped branching processes.
//!
//! Exit codes: 0 success, 1 domain failure, 2 usage or parse error.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use perron_core::io::MatrixFormat;

use crate::commands::CliError;

#[derive(Parser)]
#[command(name = "perron", version, about = "Perron-Frobenius eigenvectors via stopped branching processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Input {
    /// Matrix file (plain, csv or json).
    pub file: PathBuf,
    /// Override the format implied by the extension.
    #[arg(long, value_parser = parse_format)]
    pub format: Option<MatrixFormat>,
    /// Emit the full report as one JSON object on stdout.
    #[arg(long)]
    pub json: bool,
}

fn parse_format(s: &str) -> Result<MatrixFormat, String> {
    s.parse()
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum McMethod {
    GwReciprocal,
    GwVector,
    Ct,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum ScalingArg {
    /// c = 1/lambda; run to extinction with analytic weights.
    Critical,
    /// c = margin/lambda; geometric (GW) or exponential (CT) killing clock.
    Margin,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum LawArg {
    PoissonRows,
    SingleChildMarkov,
    BernoulliSplit,
}

#[derive(Subcommand)]
enum Command {
    /// Check primitivity and print the Perron pair.
    Validate {
        #[command(flatten)]
        input: Input,
    },
    /// Evaluate the generation series and the resolvent for one starting type.
    Exact {
        #[command(flatten)]
        input: Input,
        /// Starting (stopped) type, 0-based.
        #[arg(long = "type", default_value_t = 0)]
        start_type: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Monte Carlo estimate of the normalized eigenvector.
    Mc {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = McMethod::GwVector)]
        method: McMethod,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(2..))]
        replicas: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ScalingArg::Critical)]
        scaling: ScalingArg,
        /// Effective eigenvalue under `--scaling margin`.
        #[arg(long, default_value_t = perron_core::estimator::DEFAULT_MARGIN)]
        margin: f64,
        #[arg(long, value_enum, default_value_t = LawArg::PoissonRows)]
        law: LawArg,
        /// Starting type for gw-vector, 0-based (default: largest row sum).
        #[arg(long = "type")]
        start_type: Option<usize>,
        #[command(flatten)]
        threads: Threads,
    },
    /// Oracle, both exact evaluators and all three Monte Carlo methods side by side.
    Compare {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(2..))]
        replicas: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        threads: Threads,
    },
}

#[derive(Args, Clone, Copy)]
pub struct Threads {
    /// Worker threads (default: PERRON_THREADS, else all cores). Does not affect results.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Threads {
    fn resolve(self) -> Result<Option<usize>, CliError> {
        if let Some(t) = self.threads {
            return Ok(Some(t));
        }
        match std::env::var("PERRON_THREADS") {
            Ok(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("PERRON_THREADS must be a positive integer, got `{v}`"))),
            Err(_) => Ok(None),
        }
    }
}

fn with_pool<T: Send>(threads: Threads, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads.resolve()? {
        if n == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(pool.install(f))
}

fn run(cli: Cli) -> Result<(report::RunReport, bool), CliError> {
    match cli.command {
        Command::Validate { input } => {
            let json = input.json;
            let report = commands::validate(&input)?;
            Ok((report, json))
        }
        Command::Exact { input, start_type, tol } => {
            let json = input.json;
            Ok((commands::exact(&input, start_type, tol)?, json))
        }
        Command::Mc {
            input,
            method,
            replicas,
            seed,
            scaling,
            margin,
            law,
            start_type,
            threads,
        } => {
            let json = input.json;
            let opts = commands::McOptions {
                method,
                replicas,
                seed,
                scaling,
                margin,
                law,
                start_type,
            };
            Ok((with_pool(threads, || commands::mc(&input, &opts))??, json))
        }
        Command::Compare {
            input,
            replicas,
            seed,
            threads,
        } => {
            let json = input.json;
            Ok((with_pool(threads, || commands::compare(&input, replicas, seed))??, json))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match run(cli) {
        Ok((report, json)) => {
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.render());
            }
            eprintln!("wall time {:.3} s", started.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(CliError::NotPrimitive(report, json)) => {
            if json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.render());
            }
            eprintln!("error: not primitive");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
