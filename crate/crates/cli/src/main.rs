//! `gfod`: solve, synthesize, verify and check generalized frame operator
//! distance problems from JSON problem files.

mod commands;
mod json;
mod problem;

use std::fmt;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gfod::UINormSpec;

use crate::problem::Problem;

#[derive(Parser)]
#[command(name = "gfod", version, about = "Optimal spectra and frames for N(S - S_G) under prescribed norms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// Problem file, or `-` for stdin.
    input: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form optimal residual spectrum.
    Solve {
        #[command(flatten)]
        io: Io,
        /// Comma-separated norms for the reported minimum, e.g. `fro,p3,kyfan2+fro0.1`.
        #[arg(long, default_value = "fro")]
        norms: String,
        /// Scan every index and fail if the admissible one is not unique.
        #[arg(long)]
        debug_exhaustive: bool,
    },
    /// Explicit optimal family with a recomputed certificate.
    Synthesize {
        #[command(flatten)]
        io: Io,
    },
    /// Multi-start descent compared against the closed form.
    Verify {
        #[command(flatten)]
        io: Io,
        /// Comma-separated Schatten-p or `fro` norms.
        #[arg(long, default_value = "p1.5,fro,p3")]
        norms: String,
        /// Trials per norm.
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Seed of the first trial; trial `t` uses `seed + t`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Co-feasibility and admissibility of one truncation index (0-based).
    Check {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        index: usize,
    },
}

/// Exit 2 for bad input, 3 for numerical failure.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Numeric(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(msg) => write!(f, "invalid input: {msg}"),
            Failure::Numeric(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

fn read_problem(io: &Io) -> Result<Problem, Failure> {
    let text = if io.input == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Failure::Input(format!("stdin: {e}")))?;
        buf
    } else {
        std::fs::read_to_string(&io.input).map_err(|e| Failure::Input(format!("{}: {e}", io.input)))?
    };
    Problem::parse(&text).map_err(Failure::Input)
}

fn parse_norms(list: &str) -> Result<Vec<UINormSpec>, Failure> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<UINormSpec>().map_err(|e| Failure::Input(e.to_string())))
        .collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (io, report) = match &cli.command {
        Command::Solve {
            io,
            norms,
            debug_exhaustive,
        } => (io, commands::solve(&read_problem(io)?, &parse_norms(norms)?, *debug_exhaustive)?),
        Command::Synthesize { io } => (io, commands::synthesize(&read_problem(io)?)?),
        Command::Verify {
            io,
            norms,
            trials,
            seed,
            jobs,
        } => {
            let jobs = match jobs {
                Some(0) => return Err(Failure::Input("--jobs must be positive".into())),
                Some(n) => *n,
                None => std::thread::available_parallelism().map_or(1, |n| n.get()),
            };
            let opts = commands::VerifyOptions {
                norms: parse_norms(norms)?,
                trials: *trials,
                seed: *seed,
                jobs,
            };
            (io, commands::verify(&read_problem(io)?, &opts)?)
        }
        Command::Check { io, index } => (io, commands::check(&read_problem(io)?, *index)?),
    };
    match &io.out {
        Some(path) => std::fs::write(path, report).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gfod: {e}");
            ExitCode::from(e.code())
        }
    }
}
