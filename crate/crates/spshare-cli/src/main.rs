//! Command line front end for the sparse secret sharing library.

mod args;
mod cmd_cost;
mod cmd_decode;
mod cmd_encode;
mod cmd_optimize;
mod cmd_selftest;
mod cmd_simulate;
mod cmd_sweep;
mod report;
mod store;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "spshare",
    version,
    about = "Sparse secret sharing over finite fields: leakage-minimal sparse shares, \
             node placement with straggler tolerance, and storage cost analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the leakage-minimizing pad distribution for given sparsity targets
    Optimize(cmd_optimize::OptimizeArgs),
    /// Evaluate optimal leakage along a grid of average sparsity targets
    Sweep(cmd_sweep::SweepArgs),
    /// Split a matrix into two sparse shares and lay them out across node directories
    Encode(cmd_encode::EncodeArgs),
    /// Rebuild the matrix from node directories
    Decode(cmd_decode::DecodeArgs),
    /// Check that reconstruction survives a given set of failed nodes
    Simulate(cmd_simulate::SimulateArgs),
    /// Storage cost of the sparse layout versus a classical erasure code
    Cost(cmd_cost::CostArgs),
    /// Run built-in consistency checks
    Selftest,
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var("SPSHARE_THREADS") {
        let threads: usize = raw.trim().parse().ok().filter(|&k| k > 0).ok_or_else(|| {
            anyhow::anyhow!("SPSHARE_THREADS must be a positive integer, got {raw:?}")
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads()?;
    match cli.command {
        Command::Optimize(a) => cmd_optimize::run(a),
        Command::Sweep(a) => cmd_sweep::run(a),
        Command::Encode(a) => cmd_encode::run(a),
        Command::Decode(a) => cmd_decode::run(a),
        Command::Simulate(a) => cmd_simulate::run(a),
        Command::Cost(a) => cmd_cost::run(a),
        Command::Selftest => cmd_selftest::run(),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
