use std::num::NonZeroUsize;
use std::path::PathBuf;
use std::process::ExitCode;

use antiblockade_cli::commands::{self, Context};
use antiblockade_cli::{CliError, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "antiblockade",
    version,
    about = "Rydberg antiblockade SWAP gate simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the computational inputs and write trajectories plus a summary.
    Simulate(RunArgs),
    /// Search pulse parameters with the genetic algorithm.
    Optimize(RunArgs),
    /// Monte Carlo error budget, one row per noise source.
    Budget(RunArgs),
    /// Mean fidelity along one noise axis for each configured gate.
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides every seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for Monte Carlo sampling and the optimiser.
    #[arg(long)]
    threads: Option<NonZeroUsize>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::Simulate(args)
    | Command::Optimize(args)
    | Command::Budget(args)
    | Command::Sweep(args)) = &cli.command;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.get())
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))?;
    }
    let cfg = RunConfig::load(&args.config)?;
    let ctx = Context::new(&args.out, args.seed)?;
    commands::write_resolved_config(&cfg, &ctx)?;
    match cli.command {
        Command::Simulate(_) => {
            let s = commands::run_simulate(&cfg, &ctx)?;
            println!("F = {:.6}  T_rr = {:.4} us", s.fidelity, s.t_rr);
        }
        Command::Budget(_) => {
            let r = commands::run_budget(&cfg, &ctx)?;
            print!("{}", commands::budget_table(&r));
        }
        Command::Sweep(_) => {
            let r = commands::run_sweep(&cfg, &ctx)?;
            for c in &r.curves {
                println!("{} -> {}", c.name, c.file);
            }
        }
        Command::Optimize(_) => {
            let r = commands::run_optimize(&cfg, &ctx)?;
            println!(
                "best F = {:.6} after {} generations",
                r.best_fitness, r.generations
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
