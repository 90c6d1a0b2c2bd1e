mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Cluster(a) => commands::run_cluster(a),
        Command::Tune(a) => commands::run_tune(a),
        Command::Bench(a) => commands::run_bench(a),
        Command::Ablate(a) => commands::run_ablate(a),
        Command::Gen(a) => commands::run_gen(a),
        Command::Serve(a) => commands::run_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
