//! Command-line driver for the tagging pipeline: corpus construction,
//! training, prediction, LLM extraction, evaluation and reporting.
//!
//! Exit codes: 0 on success, 1 when a command fails while running, 2 for
//! usage and configuration errors.

pub mod args;
mod commands;
mod error;
pub mod llm;
pub mod manifest;
pub mod settings;

use std::ffi::OsString;

use clap::Parser;

pub use error::CliError;

use args::{Cli, Command};
use commands::Ctx;
use settings::RunConfig;

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let ctx = Ctx {
        config,
        manifest: cli.manifest,
    };
    match cli.command {
        Command::Tag(a) => commands::tag(&ctx, a),
        Command::BalanceSplit(a) => commands::balance_split(&ctx, a),
        Command::Train(a) => commands::train_cmd(&ctx, a),
        Command::Predict(a) => commands::predict_cmd(&ctx, a),
        Command::Eval(a) => commands::eval(&ctx, a),
        Command::LlmExtract(a) => commands::llm_extract(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
    }
}

/// Parse `args` (including the program name), run the command and return
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
