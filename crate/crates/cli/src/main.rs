//! `htp`: command-line harness over `htp-core`.
//!
//! Every command prints JSON lines on stdout. Exit codes: 0 success,
//! 1 negative verdict or refutation, 2 undecided or out of budget,
//! 3 usage or input errors, 4 I/O errors.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{FileConfig, Settings};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Budget(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Budget(_) => 2,
            CliError::Usage(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Budget(m) => m,
        }
    }
}

/// Outcome class of a successful run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Negative,
    Undecided,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Negative => 1,
            Status::Undecided => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "htp", version, about = "Diophantine solvability experiments over subrings of Q")]
struct Cli {
    /// Seed for sampling commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Certificate store (JSON lines).
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// TOML file mirroring the global flags and default budgets.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print elapsed time on stderr.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a zero in R_W up to a height bound.
    Solve(commands::SolveArgs),
    /// Polynomial reductions.
    #[command(subcommand)]
    Reduce(commands::ReduceCmd),
    /// Exact oracle on the quadratic family.
    #[command(subcommand)]
    Oracle(commands::OracleCmd),
    /// Enumerate positive and negative cylinder certificates.
    Certify(commands::CertifyArgs),
    /// Probe whether W is decided for f.
    Probe(commands::ProbeArgs),
    /// Dovetailed decision of f ∈ HTP(R_W).
    Phi(commands::PhiArgs),
    /// Finite-budget genericity check over a list of polynomials.
    Generic(commands::GenericArgs),
    /// Monte Carlo and exact measure of A(f).
    Measure(commands::MeasureArgs),
    /// Bounded check of a diophantine model of Z.
    ModelCheck(commands::ModelCheckArgs),
    /// Bounded check of an existential definition of Z.
    ExdefCheck(commands::ExdefArgs),
    /// Code number of a polynomial.
    Encode(commands::EncodeArgs),
    /// Polynomial with a given code number.
    Decode(commands::DecodeArgs),
    /// Certificate store maintenance.
    #[command(subcommand)]
    Store(StoreCmd),
}

#[derive(Debug, Subcommand)]
pub enum StoreCmd {
    /// Re-validate every record of the store.
    Verify(StoreVerifyArgs),
}

#[derive(Debug, Args)]
pub struct StoreVerifyArgs {
    /// Store file (overrides --store).
    pub path: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<Status, CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let jobs = cli.jobs.or(file.jobs);
    if jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be positive".into()));
    }
    let settings = Settings {
        seed: cli.seed.or(file.seed),
        store: cli.store.clone().or_else(|| file.store.clone()),
        file,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let mut buf = Vec::new();
    let result = pool.install(|| commands::dispatch(&cli.command, &settings, &mut buf));
    let mut out = std::io::stdout().lock();
    out.write_all(&buf)
        .and_then(|()| out.flush())
        .map_err(|e| CliError::Io(e.to_string()))?;
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let timing = cli.timing;
    let start = Instant::now();
    let code = match run(cli) {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    };
    if timing {
        eprintln!("elapsed_ms {}", start.elapsed().as_millis());
    }
    ExitCode::from(code)
}
