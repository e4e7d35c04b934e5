use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use qcoord_cli::commands::{error_record, EXIT_INPUT};
use qcoord_cli::{run_command, CliError, RunConfig};

fn main() -> ExitCode {
    let cfg = match RunConfig::try_parse() {
        Ok(cfg) => cfg,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            print!("{}", error_record(&CliError::Usage(first.to_string())));
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    let outcome = run_command(&cfg);
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(outcome.report.as_bytes());
    let _ = stdout.flush();
    ExitCode::from(outcome.exit_code as u8)
}
