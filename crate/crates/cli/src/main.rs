use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use virusperiod_cli::commands::run;
use virusperiod_cli::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = run(&cli);
    let mut stdout = std::io::stdout().lock();
    // A closed pipe is not worth a panic; the exit code still reports.
    let _ = stdout.write_all(outcome.stdout.as_bytes());
    if let Some(msg) = outcome.message.filter(|_| outcome.exit.code() != 0) {
        eprintln!("virusperiod: {msg}");
    }
    ExitCode::from(outcome.exit.code() as u8)
}
