//! Batch front end for relikit. [`run`] is the whole command-line program
//! with injectable output streams.

pub mod commands;
pub mod config;
pub mod error;
pub mod eval;
pub mod fit;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use commands::{Cli, Command};
use error::{CliError, EXIT_OK, EXIT_USAGE};
use relikit_core::parallel;

pub use config::RunConfig;
pub use eval::evaluate;
pub use fit::fit_calibrator;

/// Runs `f` inside a pool of `workers` threads, buffering its output.
fn pooled<F>(workers: Option<usize>, out: &mut dyn Write, f: F) -> Result<i32, CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<i32, CliError> + Send,
{
    let mut buf = Vec::new();
    let result = parallel::with_workers(workers, || f(&mut buf));
    out.write_all(&buf)
        .map_err(|e| CliError::Data(format!("cannot write output: {e}")))?;
    result
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Validate(a) => commands::cmd_validate(a, out),
        Command::Fit(a) => commands::cmd_fit(a, out),
        Command::Eval(a) => {
            let workers = cli.workers.or(commands::eval_config(a)?.workers);
            pooled(workers, out, |buf| commands::cmd_eval(a, buf))
        }
        Command::Synth(a) => pooled(cli.workers, out, |buf| commands::cmd_synth(a, buf)),
        Command::Theorem(a) => commands::cmd_theorem(a, out),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = if code == EXIT_OK {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    if cli.workers == Some(0) {
        let _ = writeln!(err, "usage error: workers must be positive");
        return EXIT_USAGE;
    }
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}
