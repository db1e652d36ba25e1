//! `catgraph`: structure learning for categorical data from the command line.
//!
//! Every flag can also be set through a `CATGRAPH_*` environment variable or
//! a JSON `--config` file; explicit flags win over the file, and the file
//! wins over built-in defaults. Failures print one JSON object on stderr
//! (`{"error": <kind>, "message": <text>}`) and exit with a nonzero code.

mod commands;
mod manifest;
mod settings;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "catgraph", version, about = "Birth-death MCMC structure learning for categorical data")]
struct Cli {
    #[command(subcommand)]
    command: commands::Command,
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<catgraph_core::Error>() {
            return e.kind();
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return "config";
        }
    }
    "invalid_input"
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                e.exit();
            }
            eprintln!("{}", json!({"error": "usage", "message": e.to_string().trim()}));
            return ExitCode::from(2);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({"error": error_kind(&e), "message": format!("{e:#}")}));
            ExitCode::FAILURE
        }
    }
}
