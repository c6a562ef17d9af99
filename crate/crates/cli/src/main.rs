use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gossip_cli::{cmd_rate, cmd_run, cmd_speedup, CliError, ExperimentConfig, RawConfig};

/// Randomized block gossip experiments for average consensus.
#[derive(Parser)]
#[command(name = "gossip", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run gossip trials and write a per-step CSV trace.
    Run(Flags),
    /// Mean iterations per block size against the linear-speedup baseline.
    Speedup(Flags),
    /// Exact (or Monte Carlo) convergence rate and averaging-time bound.
    Rate(Flags),
}

#[derive(Args)]
struct Flags {
    /// ring:N, grid:RxC, path:N, complete:N or file:PATH
    #[arg(long)]
    graph: Option<String>,
    /// tau:K, pairwise or all
    #[arg(long)]
    sampler: Option<String>,
    /// primal or dual
    #[arg(long)]
    engine: Option<String>,
    /// indices, constant:V or file:PATH
    #[arg(long = "c-init")]
    c_init: Option<String>,
    /// Target relative error
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Comma-separated block sizes for speedup
    #[arg(long)]
    taus: Option<String>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<String>,
    /// key=value file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn resolve(self) -> Result<ExperimentConfig, CliError> {
        let base = match &self.config {
            Some(path) => RawConfig::from_file(path)?,
            None => RawConfig::default(),
        };
        let flags = RawConfig {
            graph: self.graph,
            sampler: self.sampler,
            engine: self.engine,
            c_init: self.c_init,
            eps: self.eps,
            trials: self.trials,
            seed: self.seed,
            taus: self.taus,
            out: self.out,
            max_iters: std::env::var("GOSSIP_MAX_ITERS").ok(),
        };
        base.overridden_by(flags).validate()
    }
}

fn output(cfg: &ExperimentConfig) -> io::Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn execute(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Run(flags) => {
            let cfg = flags.resolve()?;
            let mut out = output(&cfg)?;
            let summary = cmd_run(&cfg, &mut out)?;
            eprintln!("{summary}");
            Ok(if summary.all_converged() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Speedup(flags) => {
            let cfg = flags.resolve()?;
            let mut out = output(&cfg)?;
            cmd_speedup(&cfg, &mut out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Rate(flags) => {
            let cfg = flags.resolve()?;
            let mut out = output(&cfg)?;
            cmd_rate(&cfg, &mut out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e @ CliError::Usage { .. }) => {
            eprintln!("gossip: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("gossip: {e}");
            ExitCode::from(1)
        }
    }
}
