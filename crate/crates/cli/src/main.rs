use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = genstrat_cli::Cli::parse();
    match genstrat_cli::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
