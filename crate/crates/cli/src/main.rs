use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use minimax_cli::commands::{cmd_analyze, cmd_gan, cmd_run, cmd_sweep, Overrides, EXIT_FAILURE};
use minimax_core::FieldConvention;

/// Rank-one Gauss-Newton solvers for min-max games.
#[derive(Debug, Parser)]
#[command(name = "minimax-gn", version)]
struct Cli {
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "MINIMAX_GN_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Io {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long)]
    seed: Option<u64>,
    /// `paper` or `descent-ascent`.
    #[arg(long)]
    convention: Option<FieldConvention>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, convention: self.convention }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a solver on a game or train a toy GAN; writes a record and CSV.
    Run(RunArgs),
    /// Spectral analysis at the game's stationary point.
    Analyze(RunArgs),
    /// Run a parameter grid; `--out` is a directory.
    Sweep {
        #[command(flatten)]
        io: Io,
    },
    /// Train a toy GAN and store its final parameters.
    Gan(RunArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_FAILURE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(&a.io.config, &a.io.out, a.overrides()),
        Command::Analyze(a) => cmd_analyze(&a.io.config, &a.io.out, a.overrides()),
        Command::Sweep { io } => cmd_sweep(&io.config, &io.out, cli.workers),
        Command::Gan(a) => cmd_gan(&a.io.config, &a.io.out, a.overrides()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
