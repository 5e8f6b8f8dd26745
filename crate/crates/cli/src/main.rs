mod args;
mod commands;
mod report;
mod source;

use std::process::ExitCode;

use clap::Parser;
use lipdyn::lyapunov::LyapunovError;

use crate::args::Cli;
use crate::commands::Outcome;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Escaped) => {
            eprintln!("lipdyn: orbit escaped");
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(e) => {
            eprintln!("lipdyn: {e:#}");
            let numerical = matches!(
                e.downcast_ref::<LyapunovError>(),
                Some(LyapunovError::BreakpointHit { .. })
            );
            ExitCode::from(if numerical {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            })
        }
    }
}
