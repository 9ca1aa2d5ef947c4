use std::process::ExitCode;

use clap::Parser;
use log::LevelFilter;
use mrdensity::cli::{self, Cli};

fn main() -> ExitCode {
    let args = Cli::parse();
    let level = match args.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    let result = cli::init_thread_pool().and_then(|()| cli::run(args));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e))
        }
    }
}
