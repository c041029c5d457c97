use std::process::ExitCode;

use cim_cli::{dispatch, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        (false, _) => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();

    match dispatch(&cli.command) {
        Ok(report) => {
            for (name, value) in &report.metrics {
                println!("{name} = {value}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
