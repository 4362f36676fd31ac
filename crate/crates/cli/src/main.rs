use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use snetcalc_cli::{run, Cli};

fn main() -> ExitCode {
    let arguments: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let stdout = io::stdout();
    let stderr = io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    match run(cli, arguments, &mut out, &mut err) {
        Ok(()) => {
            let _ = out.flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            let _ = out.flush();
            let _ = writeln!(err, "error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
