use std::process::ExitCode;

use ckc_cli::{configure_threads, run, Cli, THREADS_ENV};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var(THREADS_ENV).ok();
    match configure_threads(threads.as_deref()).and_then(|()| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.record());
            ExitCode::FAILURE
        }
    }
}
