//! `pushmap` experiment driver.

mod commands;
mod config;
mod manifest;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::{CliError, Run};
use config::{ExperimentConfig, Overrides};

#[derive(Parser, Debug)]
#[command(name = "pushmap", version, about = "Train and analyze Wasserstein pushforward maps")]
struct Cli {
    /// Experiment config file (TOML sections, see configs/).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, value_name = "K")]
    workers: Option<usize>,
    /// Transport method for W2 estimates.
    #[arg(long, global = true, value_parser = ["exact", "minibatch", "subsample"])]
    method: Option<String>,
    /// Sample size for single-run commands.
    #[arg(short = 'n', long = "n", global = true, value_name = "N")]
    n: Option<usize>,
    /// Example: 1d or 2d.
    #[arg(long, global = true)]
    example: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal assignment between fresh source and target samples.
    Solve,
    /// Source and target samples plus the tabulated target density.
    Sample,
    /// Train one network and decompose its excess risk.
    Train,
    /// Rate sweep over sample sizes and repeats.
    Sweep,
    /// Doubling-ratio probe of a density.
    ProbeDoubling,
    /// Hölder-exponent probe of a transport map.
    ProbeHolder,
    /// Target-shift inequality on three shifted targets.
    Ood,
    /// Aggregate sweep CSVs under DIR (default: the output directory).
    Report { dir: Option<PathBuf> },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sample => "sample",
            Command::Train => "train",
            Command::Sweep => "sweep",
            Command::ProbeDoubling => "probe-doubling",
            Command::ProbeHolder => "probe-holder",
            Command::Ood => "ood",
            Command::Report { .. } => "report",
        }
    }
}

fn execute(cli: Cli) -> Result<String, CliError> {
    let (mut cfg, bytes) = match &cli.config {
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            let text = String::from_utf8(bytes.clone()).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            (ExperimentConfig::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?, Some(bytes))
        }
        None => (ExperimentConfig::default(), None),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        workers: cli.workers,
        method: cli.method.clone(),
        n: cli.n,
        example: cli.example.clone(),
    });
    if let Command::Report { dir } = &cli.command {
        let dir = dir.clone().unwrap_or_else(|| cfg.output.dir.clone());
        return commands::report(&dir, cfg.to_text());
    }
    let mut run = Run::start(cfg, cli.command.name(), bytes.as_deref())?;
    let summary = match cli.command {
        Command::Solve => commands::solve(&mut run),
        Command::Sample => commands::sample(&mut run),
        Command::Train => commands::train_cmd(&mut run),
        Command::Sweep => commands::sweep(&mut run),
        Command::ProbeDoubling => commands::probe_doubling(&mut run),
        Command::ProbeHolder => commands::probe_holder(&mut run),
        Command::Ood => commands::ood(&mut run),
        Command::Report { .. } => unreachable!("handled above"),
    }?;
    let manifest = run.finish()?;
    Ok(format!("{summary}\nmanifest: {}", manifest.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
