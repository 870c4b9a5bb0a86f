//! `newspulse`: news indicators and market response from the command line.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::Command;
use config::{Overrides, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "newspulse", version, about = "News novelty, topicality and intraday market response")]
struct Args {
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Restrict to one keyword, e.g. GM.N.
    #[arg(long)]
    keyword: Option<String>,
    /// Restrict to one article kind (ALERT, HEADLINE, STORY, TITLE).
    #[arg(long)]
    kind: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(args: Args) -> Result<(), CliError> {
    let overrides = Overrides {
        keyword: args.keyword,
        kind: args.kind,
        out: args.out,
        seed: args.seed,
    };
    let config = RunConfig::load(&args.config, overrides)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.workers {
        if n == 0 {
            return Err(CliError::Validation("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Validation(e.to_string()))?;
    pool.install(|| commands::run(args.command, &config))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("newspulse: {e}");
            e.exit_code()
        }
    }
}
