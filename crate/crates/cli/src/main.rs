use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use sldonoghue_cli::commands::{apply_overrides, run, Command, Overrides, Status};
use sldonoghue_cli::config::{Format, RunConfig};
use sldonoghue_cli::{exit, thread_cap, CliError};

/// Donoghue m-functions of Sturm–Liouville operators with limit-circle endpoints.
///
/// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 validation failure.
/// SLDONOGHUE_THREADS caps the worker threads.
#[derive(Parser, Debug)]
#[command(name = "sldonoghue", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Overrides `[output] format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Seed for random z-grids and validation samples.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Overrides `[tolerances] rtol`.
    #[arg(long, value_name = "X")]
    rtol: Option<f64>,
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    apply_overrides(&mut cfg, Overrides { seed: args.seed, rtol: args.rtol })?;
    let format = args.format.unwrap_or(cfg.output.format);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;
    let outcome = pool.install(|| run(args.command, &cfg, args.seed))?;
    match &args.out {
        Some(path) => {
            let f = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(f);
            outcome.report.write(format, &mut w)?;
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
        None => outcome.report.write(format, std::io::stdout().lock())?,
    }
    Ok(match outcome.status {
        Status::Ok => exit::OK,
        Status::RowErrors(n) => {
            eprintln!("{n} grid row(s) failed; see the error column");
            exit::NUMERICAL
        }
        Status::ChecksFailed(n) => {
            eprintln!("{n} validation check(s) failed");
            exit::VALIDATION
        }
    })
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match execute(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
