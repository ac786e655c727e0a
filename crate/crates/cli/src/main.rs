use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    match fdreg_cli::run(fdreg_cli::Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
