use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use factfind_cli::{load_config, run, RunOptions};

/// Solve, sweep and simulate the fact-finding game on social networks.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Seed for every random stream; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Quadrature nodes per value segment; overrides the config.
    #[arg(long)]
    grid: Option<usize>,
    /// Suppress the summary on standard error.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let options = RunOptions {
        out: args
            .out
            .or_else(|| config.out.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
        seed: args.seed,
        grid: args.grid,
        quiet: args.quiet,
        base_dir: args.config.parent().map(PathBuf::from).unwrap_or_default(),
    };
    ExitCode::from(run(&config, &options) as u8)
}
