//! `genset` — experiments with least-squares Fourier approximation on
//! generated point sets.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 when every grid
//! point of a sweep is infeasible.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use genset_core::harness::{
    cmd_approx, cmd_bound, cmd_convergence, cmd_cross, cmd_nodes, cmd_search, cmd_verify,
    cmd_wce, CommandOutput, CommandStatus, ExperimentConfig, OutputFormat,
};
use genset_core::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "genset", version, about = "Function approximation on generated sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to a flat JSON configuration document.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Enumerate a weighted hyperbolic cross.
    Cross,
    /// Emit a generated node list.
    Nodes,
    /// Least-squares approximation of a test function.
    Approx,
    /// Exact surrogate worst-case error of one generator.
    Wce,
    /// Tabulate the theoretical bounds over a grid.
    Bound,
    /// Search for an accepted generator.
    Search,
    /// Convergence study over an n-grid.
    Convergence,
    /// Run the lemma/invariant verification suite.
    Verify,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<CommandOutput, Error> {
    let cfg = load_config(cli)?;
    let format: OutputFormat = cli.format.into();
    // verify always reports JSON
    match cli.command {
        Command::Cross => cmd_cross(&cfg, format),
        Command::Nodes => cmd_nodes(&cfg, format),
        Command::Approx => cmd_approx(&cfg, format),
        Command::Wce => cmd_wce(&cfg, format),
        Command::Bound => cmd_bound(&cfg, format),
        Command::Search => cmd_search(&cfg, format),
        Command::Convergence => cmd_convergence(&cfg, format),
        Command::Verify => cmd_verify(&cfg, format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => {
            if let Some(summary) = &output.summary {
                eprintln!("{summary}");
            }
            let write_result = match &cli.out {
                Some(path) => fs::write(path, output.text.as_bytes()),
                None => std::io::stdout().write_all(output.text.as_bytes()),
            };
            if let Err(e) = write_result {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            match output.status {
                CommandStatus::Success => ExitCode::SUCCESS,
                CommandStatus::InfeasibleEverywhere => {
                    eprintln!("every grid point is infeasible");
                    ExitCode::from(3)
                }
            }
        }
        Err(Error::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
