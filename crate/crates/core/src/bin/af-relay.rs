use std::path::PathBuf;
use std::process::ExitCode;

use af_relay::experiment::{run_experiment, ExperimentSpec, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(version, about = "Relay power allocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML spec file.
    Run {
        spec: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (never changes results).
        #[arg(long, default_value_t = 1)]
        shards: usize,
        /// Override frames per point (trials for allocation-only studies).
        #[arg(long)]
        frames_override: Option<u64>,
        /// Output directory (default: the spec's `output`, else `out`).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Print the fully resolved spec and exit.
        #[arg(long)]
        print_config: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let Command::Run {
        spec,
        seed,
        shards,
        frames_override,
        out_dir,
        print_config,
    } = Cli::parse().command;

    let result = ExperimentSpec::from_file(&spec).and_then(|mut s| {
        if let Some(seed) = seed {
            s.seed = seed;
        }
        if let Some(n) = frames_override {
            s.override_budget(n)?;
        }
        if print_config {
            print!("{}", s.to_toml());
            return Ok(None);
        }
        run_experiment(&s, &RunOptions { out_dir, shards }).map(Some)
    });
    match result {
        Ok(Some(summary)) => {
            println!("{}", summary.line());
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", spec.display());
            ExitCode::from(2)
        }
    }
}
