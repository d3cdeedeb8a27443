//! `qpend` — conditioned-pendulum simulation runs from a key=value config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qpend_cli::config::load_config;
use qpend_cli::emit::{emit_figure, Figure};
use qpend_cli::error::{CliError, Result};
use qpend_cli::runner::{resume_run, run_scenario};

#[derive(Parser)]
#[command(
    name = "qpend",
    about = "Conditional quantum and classical dynamics of the driven pendulum \
             under continuous position measurement",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a key=value config file.
    Simulate {
        /// Path to the config file.
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores). Results are identical for
        /// any worker count.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory (default: ./qpend_run_<run_id>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reshape completed runs into a figure's data table.
    Emit {
        /// A run directory, or a directory containing several runs.
        run_dir: PathBuf,
        /// Which figure to emit: fig2, fig3, fig4, fig5, or fig6.
        #[arg(long, value_parser = parse_figure)]
        figure: Figure,
    },
    /// Continue a halted or interrupted run from its checkpoint.
    Resume {
        /// The run directory to continue.
        run_dir: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn parse_figure(s: &str) -> std::result::Result<Figure, String> {
    s.parse()
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            workers,
            out,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.params.seed = seed;
            }
            let out_dir = out.unwrap_or_else(|| PathBuf::from(format!("qpend_run_{}", cfg.run_id())));
            let summary = run_scenario(&cfg, &out_dir, workers)?;
            Ok(summary.to_json_line())
        }
        Command::Emit { run_dir, figure } => {
            let summary = emit_figure(&run_dir, figure)?;
            serde_json::to_string(&summary).map_err(|e| CliError::Failure(e.to_string()))
        }
        Command::Resume { run_dir, workers } => {
            let summary = resume_run(&run_dir, workers)?;
            Ok(summary.to_json_line())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
