use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use ringstar::experiment::{error_json, exit_code, reproduce, run, ExperimentConfig, RunOptions, RunSummary};
use ringstar::{Error, Result};

/// Ring-star Ising model experiments.
#[derive(Parser)]
#[command(name = "ringstar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Regenerate the data behind a figure (fig2..fig7, figS1..figS4).
    Reproduce {
        figure: Option<String>,
        /// TOML file with a `figure` key, as an alternative to the positional id.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn options(self) -> RunOptions {
        RunOptions {
            workers: self.workers,
            output_dir: self.output,
            seed: self.seed,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReproduceFile {
    figure: String,
    seed: Option<u64>,
    workers: Option<usize>,
    output_dir: Option<PathBuf>,
}

fn execute(cli: Cli) -> Result<RunSummary> {
    match cli.command {
        Command::Experiment { config, run: args } => {
            let config = ExperimentConfig::from_file(&config)?;
            run(&config, &args.options())
        }
        Command::Reproduce {
            figure,
            config,
            run: args,
        } => {
            let mut options = args.options();
            let figure = match (figure, config) {
                (Some(f), None) => f,
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(path)?;
                    let file: ReproduceFile = toml::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
                    options.seed = options.seed.or(file.seed);
                    options.workers = options.workers.or(file.workers);
                    options.output_dir = options.output_dir.or(file.output_dir);
                    file.figure
                }
                _ => return Err(Error::InvalidInput("give either a figure id or --config".into())),
            };
            reproduce::reproduce(&figure, &options)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(summary) => {
            println!(
                "wrote {} files to {} ({:.1} s)",
                summary.manifest.files.len() + 1,
                summary.output_dir.display(),
                summary.manifest.wall_time_seconds
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
