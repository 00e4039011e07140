use std::io::Write;
use std::panic;
use std::process::ExitCode;

use clap::Parser;
use idi_cli::{Cli, CliError};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<_> = std::env::args_os().collect();
    // Help and version go straight to clap, which prints them and exits 0.
    if args.iter().skip(1).any(|a| a == "--help" || a == "-h" || a == "--version" || a == "-V" || a == "help") {
        Cli::parse_from(&args);
    }
    let outcome = panic::catch_unwind(|| idi_cli::run(args.clone()));
    let (code, err) = match outcome {
        Ok(Ok(text)) => {
            print!("{text}");
            let _ = std::io::stdout().flush();
            return ExitCode::SUCCESS;
        }
        Ok(Err(e)) => (e.exit_code(), e.to_json()),
        Err(_) => {
            let e = CliError::Pipeline(idi_core::Error::Invalid("internal error".into()));
            (1, e.to_json())
        }
    };
    eprintln!("{err}");
    ExitCode::from(code as u8)
}
