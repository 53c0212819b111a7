//! `netglm` command-line interface.
//!
//! ```text
//! netglm simulate --n 100 --latent-rank 2 --intercept -2.5 --strength 0.2 --seed 7 --out sim
//! netglm fit --n 100 --edges sim/edges.tsv --covariate sim/covariate_1.csv \
//!     --covariate sim/covariate_2.csv --budget 300 --rank-cap 2 --out fit
//! ```
//!
//! Exit codes: 0 success, 2 input error, 3 numerical failure, 4 AUC undefined.
//! Failures print a JSON error record on stderr.

mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{Command, RunConfig};
use error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "netglm", version, about = "Low-rank effects GLMs for network data")]
struct Cli {
    command: Command,
    /// Flat TOML file with any of the option keys (underscored).
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: RunConfig,
}

fn execute(cli: Cli) -> CliResult<PathBuf> {
    let base = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let config = base.overridden_by(cli.overrides);
    run::run(cli.command, &config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = e.record();
            eprintln!("{}", serde_json::to_string(&record).unwrap_or_else(|_| e.to_string()));
            ExitCode::from(record.exit_code as u8)
        }
    }
}
