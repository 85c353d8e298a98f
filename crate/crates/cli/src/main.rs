mod args;
mod commands;
mod config;

use args::{Cli, Command};
use clap::Parser;
use commands::CliError;
use std::process::ExitCode;

const EXIT_USAGE: u8 = 64;

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Fingerprint(a) => commands::fingerprint(a),
        Command::Train(a) => commands::train_cmd(a, cli.seed),
        Command::Eval(a) => commands::eval(a),
        Command::GradCheck(a) => commands::grad_check(a, cli.seed),
        Command::GenSynthetic(a) => commands::gen_synthetic(a, cli.seed),
        Command::Baseline(a) => commands::baseline(a, cli.seed),
    }
}

fn main() -> ExitCode {
    let argv = match config::merge(std::env::args().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match serde_json::to_string(&cli) {
        Ok(resolved) => eprintln!("resolved config: {resolved}"),
        Err(e) => eprintln!("warning: could not render config: {e}"),
    }
    match vscreen_core::par::with_threads(cli.threads, || run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
