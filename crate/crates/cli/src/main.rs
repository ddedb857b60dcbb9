mod args;
mod commands;
mod config;
mod error;
mod manifest;

use std::ffi::OsString;

use clap::Parser;

use crate::args::Cli;

fn run_cli(argv: Vec<OsString>) -> i32 {
    let argv = match config::apply_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn main() {
    std::process::exit(run_cli(std::env::args_os().collect()));
}
