use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use shotnoise_cli::{execute, parse_config, Command, Overrides};

/// Shot noise simulation and limit-theorem verification runner.
#[derive(Parser, Debug)]
#[command(name = "shotnoise", version, about)]
struct Args {
    /// Configuration file (TOML sections: [model], [response], [experiment],
    /// [output] plus per-command sections).
    #[arg(long)]
    config: PathBuf,

    /// Command to run (overrides the file's `command` key).
    #[arg(long, value_enum)]
    command: Option<Command>,

    /// RNG seed (overrides the file's `seed` key).
    #[arg(long)]
    seed: Option<u64>,

    /// Worker thread count (overrides the file's `workers` key).
    #[arg(long)]
    workers: Option<usize>,

    /// Output directory (overrides the file and SHOTNOISE_OUTPUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        command: args.command,
        seed: args.seed,
        workers: args.workers,
        output_dir: args.out,
    };
    let contents = match std::fs::read_to_string(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: io: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let config = match parse_config(&contents, &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(&config) {
        Ok(outcome) => {
            for artifact in &outcome.artifacts {
                println!("wrote {}", artifact.display());
            }
            if outcome.pass {
                println!("{}: pass", config.command.name());
                ExitCode::SUCCESS
            } else {
                println!("{}: fail", config.command.name());
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
