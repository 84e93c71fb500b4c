use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    match shp_risk::cli::run(shp_risk::cli::Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
