//! `egyptian` command-line tool.

#![forbid(unsafe_code)]

mod args;
mod commands;
mod record;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use record::Outcome;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Truncated) => {
            eprintln!("error: wall-clock budget exceeded; partial results flagged \"truncated\"");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
