use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use patrolgame_cli::{configure_threads, run, Cli};

fn main() -> ExitCode {
    configure_threads();
    let outcome = run(Cli::parse());
    // A closed pipe on stdout is not worth a panic.
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    ExitCode::from(outcome.code as u8)
}
