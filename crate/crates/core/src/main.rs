use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use yent::cli::{run, RunConfig};

/// Batch runner for entanglement measures and three-mode dynamics.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output` from the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = RunConfig::load(&args.config).and_then(|mut cfg| {
        if let Some(dir) = args.output_dir {
            cfg.output = Some(dir);
        }
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        run(&cfg)
    });
    match result {
        Ok(outcome) => {
            for line in &outcome.messages {
                eprintln!("{line}");
            }
            for file in &outcome.files {
                println!("{}", file.display());
            }
            ExitCode::from(outcome.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
